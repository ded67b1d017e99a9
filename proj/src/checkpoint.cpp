#include "same/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "same/errors.hpp"

namespace same {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ParamGroup parse_group(const std::string& s) {
  for (ParamGroup g : {ParamGroup::kEncoder, ParamGroup::kNodeHead, ParamGroup::kGraphHead,
                       ParamGroup::kLinkHead})
    if (s == to_string(g)) return g;
  throw IntegrityError("checkpoint: unknown parameter group '" + s + "'");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ostringstream out;
  out << "SAME-CHECKPOINT 1\n";
  for (const auto& [k, v] : checkpoint.meta) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos)
      throw ArgumentError("checkpoint meta key/value must be single-line, key without spaces");
    out << "meta " << k << ' ' << v << '\n';
  }
  const ModelDims& d = checkpoint.model.dims;
  out << "dims " << d.in_dim << ' ' << d.hidden << ' ' << d.layers << ' ' << d.nc_classes << ' '
      << d.gc_classes << ' ' << (d.final_normalize ? 1 : 0) << '\n';
  const ParamSet& p = checkpoint.model.params;
  char buf[40];
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Tensor& t = p.values[i];
    out << "param " << p.names[i] << ' ' << to_string(p.groups[i]) << ' ' << t.rows() << ' '
        << t.cols() << '\n';
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%a", t(r, c));
        out << (c ? " " : "") << buf;
      }
      out << '\n';
    }
  }
  std::string body = out.str();
  body += "checksum " + hex64(fnv1a64(body)) + "\n";
  std::ofstream file(path, std::ios::binary);
  if (!file) throw FormatError("cannot write checkpoint " + path.string());
  file << body;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw FormatError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << file.rdbuf();
  const std::string text = ss.str();

  const std::size_t pos = text.rfind("checksum ");
  if (pos == std::string::npos) throw IntegrityError("checkpoint: missing checksum");
  const std::string body = text.substr(0, pos);
  std::string stored = text.substr(pos + 9);
  while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
  if (stored != hex64(fnv1a64(body)))
    throw IntegrityError("checkpoint: checksum mismatch in " + path.string());

  std::istringstream in(body);
  std::string line, word;
  std::getline(in, line);
  if (line != "SAME-CHECKPOINT 1") throw IntegrityError("checkpoint: bad header '" + line + "'");

  Checkpoint cp;
  bool have_dims = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    ls >> word;
    if (word == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      cp.meta[key] = value;
    } else if (word == "dims") {
      ModelDims& d = cp.model.dims;
      int fn = 1;
      if (!(ls >> d.in_dim >> d.hidden >> d.layers >> d.nc_classes >> d.gc_classes >> fn))
        throw IntegrityError("checkpoint: malformed dims line");
      d.final_normalize = fn != 0;
      have_dims = true;
    } else if (word == "param") {
      std::string name, group;
      Eigen::Index rows = 0, cols = 0;
      if (!(ls >> name >> group >> rows >> cols) || rows < 0 || cols < 0)
        throw IntegrityError("checkpoint: malformed param line");
      Tensor t(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (!std::getline(in, line)) throw IntegrityError("checkpoint: truncated " + name);
        const char* s = line.c_str();
        for (Eigen::Index c = 0; c < cols; ++c) {
          char* end = nullptr;
          t(r, c) = std::strtod(s, &end);
          if (end == s) throw IntegrityError("checkpoint: bad value in " + name);
          s = end;
        }
      }
      cp.model.params.add(name, parse_group(group), std::move(t));
    } else if (!word.empty()) {
      throw IntegrityError("checkpoint: unexpected record '" + word + "'");
    }
  }
  if (!have_dims) throw IntegrityError("checkpoint: missing dims");

  // Structure must match a freshly initialized model of the same dims.
  const ModelParams ref = ModelParams::init(cp.model.dims, 0);
  if (ref.params.size() != cp.model.params.size())
    throw IntegrityError("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < ref.params.size(); ++i) {
    const Tensor& a = ref.params.values[i];
    const Tensor& b = cp.model.params.values[i];
    if (ref.params.names[i] != cp.model.params.names[i] || a.rows() != b.rows() ||
        a.cols() != b.cols() || ref.params.groups[i] != cp.model.params.groups[i])
      throw IntegrityError("checkpoint: parameter '" + cp.model.params.names[i] +
                           "' does not match the model layout");
  }
  return cp;
}

}  // namespace same
