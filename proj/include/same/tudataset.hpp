#pragma once

#include <filesystem>
#include <string>

#include "same/graph.hpp"

namespace same {

/// Where node features come from when reading a TUDataset directory.
enum class FeatureSource {
  /// NAME_node_attributes.txt when present, otherwise one-hot node labels.
  kAttributes,
  /// Attributes concatenated with one-hot node labels (when both exist).
  kAttributesAndLabels,
};

/// Reads the TUDataset text format from `directory`:
///
///   NAME_A.txt               "i, j" per line, 1-indexed global node ids
///   NAME_graph_indicator.txt graph id (1-indexed) per node
///   NAME_graph_labels.txt    integer label per graph
///   NAME_node_labels.txt     optional, integer label per node
///   NAME_node_attributes.txt optional, comma-separated reals per node
///
/// Graph and node labels are remapped to a dense 0-based range in increasing
/// order of the raw values. When neither attributes nor node labels exist,
/// every node gets the constant feature 1.
///
/// Throws FormatError for missing mandatory files, ParseError (with line
/// number) for malformed tokens and IntegrityError for cross-file
/// inconsistencies.
GraphDataset parse_tudataset(const std::filesystem::path& directory, const std::string& name,
                             FeatureSource features = FeatureSource::kAttributes);

/// Writes `dataset` in the same format. Node features are written as
/// attributes; labels are written as their dense indices. Edges are listed
/// in both directions like the upstream files.
void write_tudataset(const GraphDataset& dataset, const std::filesystem::path& directory,
                     bool write_attributes = true);

}  // namespace same
