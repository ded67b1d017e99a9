#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "same/checkpoint.hpp"
#include "same/config.hpp"
#include "same/errors.hpp"
#include "same/report.hpp"
#include "test_support.hpp"

using namespace same;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path log = scratch / "cli_output.txt";
  const std::string cmd = std::string(SAME_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("same_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string small_run(const std::string& folds = "0,1", int workers = 2) {
  return "--dataset synthetic:30 --folds 3 --epochs 3 --batch-size 8 --hidden 16 --eval-every 1"
         " --fold-ids " + folds + " --workers " + std::to_string(workers);
}

}  // namespace

TEST_CASE("config text parses, snapshots and round-trips") {
  const RunConfig c = parse_config(
      "# comment\n[data]\ndataset = synthetic:40\nfolds = 5\nfold_ids = 0,2\n"
      "[train]\nstrategy = esame\ntasks = gc,lp\ninner_lr = 0.05\nmeta_grad = so\n"
      "[eval]\nmethod = mlp\nmlp_hidden = 32\n[run]\nout = somewhere\n");
  CHECK(c.dataset == "synthetic:40");
  CHECK(c.folds == 5);
  CHECK(c.fold_ids == std::vector<int>{0, 2});
  CHECK(c.train.strategy == StrategyKind::kESAME);
  CHECK(c.train.tasks.label() == "gc+lp");
  CHECK(c.train.inner_lr == 0.05);
  CHECK(c.eval.method == EvalMethod::kMlp);
  CHECK(c.eval.mlp.hidden == 32);
  CHECK(selected_folds(c) == std::vector<int>{0, 2});

  const RunConfig back = parse_config(config_snapshot(c));
  CHECK(config_snapshot(back) == config_snapshot(c));
  CHECK(config_hash(back) == config_hash(c));

  RunConfig moved = c;
  moved.out = "elsewhere";
  moved.workers = 7;
  CHECK(config_hash(moved) == config_hash(c));
  moved.train.seed = 1;
  CHECK(config_hash(moved) != config_hash(c));
}

TEST_CASE("config errors name the problem") {
  CHECK_THROWS_AS(parse_config("[train]\nlearning_rate = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[train]\nstrategy = maml\n"), ParseError);
  RunConfig direct;
  CHECK_THROWS_AS(apply_setting(direct, "train", "learning_rate", "1"), ArgumentError);
  CHECK_THROWS_AS(parse_config("[train\n"), ParseError);
  CHECK_THROWS_AS(parse_config("no equals sign\n"), ParseError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), FormatError);
  try {
    parse_config("[data]\nfolds = 3\nwhat\n", "x.ini");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("x.ini:3") != std::string::npos);
  }
}

TEST_CASE("inspect prints the fixture summary and exit codes follow the contract") {
  const fs::path tmp = scratch_dir("inspect");
  Run r = run_cli("inspect --dataset " + testing::fixture_dir("tiny"), tmp);
  CHECK(r.code == 0);
  CHECK(r.output.find("TINY: 2 graphs, 2 graph classes, 2 node classes, feature dim 2") !=
        std::string::npos);
  r = run_cli("inspect --dataset " + testing::fixture_dir("tiny") + " --features attributes+labels", tmp);
  CHECK(r.output.find("feature dim 4") != std::string::npos);

  CHECK(run_cli("inspect --dataset /nonexistent/dataset/dir", tmp).code == 3);
  CHECK(run_cli("train --no-such-flag", tmp).code == 2);
  CHECK(run_cli("train --dataset synthetic:20 --strategy maml", tmp).code == 2);
  CHECK(run_cli("", tmp).code == 2);
  fs::remove_all(tmp);
}

TEST_CASE("train, probe and report round trip") {
  const fs::path tmp = scratch_dir("roundtrip");
  const fs::path out = tmp / "esame";
  Run r = run_cli("train " + small_run() + " --strategy esame --tasks gc,nc --evaluate --out " + out.string(), tmp);
  INFO(r.output);
  REQUIRE(r.code == 0);
  for (const char* f : {"config.ini", "metrics.csv", "metrics.json", "fold0/model.ckpt",
                        "fold0/curve.csv", "fold0/train.log", "fold1/model.ckpt"})
    CHECK(fs::exists(out / f));
  CHECK_FALSE(fs::exists(out / "fold2"));
  const auto trained_rows = read_metrics_csv(out / "metrics.csv");
  CHECK(trained_rows.size() == 4);  // 2 folds x 2 tasks

  // Probing the checkpoints reproduces the metrics written during training.
  const fs::path probed = tmp / "probed";
  r = run_cli("probe --checkpoint " + out.string() + " --out " + probed.string(), tmp);
  INFO(r.output);
  REQUIRE(r.code == 0);
  CHECK(slurp(probed / "metrics.csv") == slurp(out / "metrics.csv"));

  // Unseen tasks land in the Fig1 family.
  r = run_cli("probe --checkpoint " + (out / "fold0" / "model.ckpt").string() +
                  " --tasks lp --out " + (tmp / "fig1").string(),
              tmp);
  REQUIRE(r.code == 0);
  const auto fig1 = read_metrics_csv(tmp / "fig1" / "metrics.csv");
  REQUIRE(fig1.size() == 1);
  CHECK(fig1[0].experiment == "Fig1");
  CHECK(fig1[0].metric == "auc");

  const fs::path base = tmp / "baseline";
  r = run_cli("train " + small_run() + " --strategy classical-st --tasks gc --evaluate --out " +
                  (base / "gc").string(),
              tmp);
  REQUIRE(r.code == 0);
  r = run_cli("transfer " + small_run() + " --strategy isame --tasks gc,nc --target lp --probe mlp --out " +
                  (tmp / "q3").string(),
              tmp);
  INFO(r.output);
  REQUIRE(r.code == 0);
  CHECK(read_metrics_csv(tmp / "q3" / "metrics.csv").at(0).experiment == "Q3");

  r = run_cli("report --results " + tmp.string() + " --out " + (tmp / "report").string(), tmp);
  INFO(r.output);
  REQUIRE(r.code == 0);
  for (const char* f : {"summary.csv", "delta_m.csv", "fig1_drop.csv", "tables.txt", "report.json"})
    CHECK(fs::exists(tmp / "report" / f));
  CHECK(slurp(tmp / "report" / "summary.csv").find("# sources:") != std::string::npos);
  CHECK(run_cli("report --results " + (tmp / "nothing").string(), tmp).code == 3);
  fs::remove_all(tmp);
}

TEST_CASE("a corrupted checkpoint is refused with the integrity exit code") {
  const fs::path tmp = scratch_dir("corrupt");
  const fs::path out = tmp / "run";
  REQUIRE(run_cli("train " + small_run("0") + " --out " + out.string(), tmp).code == 0);
  const fs::path ckpt = out / "fold0" / "model.ckpt";
  std::string bytes = slurp(ckpt);
  REQUIRE(bytes.size() > 100);
  bytes[bytes.size() - 20] = bytes[bytes.size() - 20] == '1' ? '2' : '1';
  std::ofstream(ckpt, std::ios::binary) << bytes;
  CHECK_THROWS_AS(load_checkpoint(ckpt), IntegrityError);
  CHECK(run_cli("probe --checkpoint " + ckpt.string() + " --out " + (tmp / "p").string(), tmp).code == 5);
  fs::remove_all(tmp);
}

TEST_CASE("reruns with the same seed give byte-identical metrics") {
  const fs::path tmp = scratch_dir("determinism");
  const std::string args = " --strategy isame --evaluate --seed 4 --out ";
  REQUIRE(run_cli("train " + small_run() + args + (tmp / "a").string(), tmp).code == 0);
  REQUIRE(run_cli("train " + small_run("0,1", 1) + args + (tmp / "b").string(), tmp).code == 0);
  CHECK(slurp(tmp / "a" / "metrics.csv") == slurp(tmp / "b" / "metrics.csv"));
  CHECK(slurp(tmp / "a" / "fold1" / "model.ckpt") == slurp(tmp / "b" / "fold1" / "model.ckpt"));
  fs::remove_all(tmp);
}
