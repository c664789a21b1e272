#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "infomaxda/artifacts.hpp"
#include "infomaxda/cli.hpp"
#include "infomaxda/config.hpp"
#include "infomaxda/errors.hpp"

using namespace infomaxda;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "infomaxda");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("infomaxda_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

const std::vector<std::string> kSmallTrain{"--data.n", "120", "--epochs", "2", "--arch.encoder_hidden", "8",
                                           "--arch.critic_hidden", "8"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

TEST_CASE("config keys round-trip through text") {
  ResolvedConfig c = ResolvedConfig::defaults_for("train");
  c.set("train.alpha", "0.25");
  c.set("arch.encoder_hidden", "16,8");
  c.set("train.ablation", "m");
  c.set("run.seeds", "3,4");
  CHECK(c.train.alpha == 0.25);
  CHECK(c.train.arch.encoder_hidden == std::vector<std::size_t>{16, 8});
  CHECK(c.get("train.ablation") == "m");

  const fs::path dir = scratch("roundtrip");
  atomic_write_text(dir / "c.cfg", c.to_text());
  ResolvedConfig back = ResolvedConfig::defaults_for("train");
  apply_config_file(back, dir / "c.cfg");
  CHECK(back.entries() == c.entries());

  CHECK_THROWS_AS(c.set("train.nope", "1"), ValidationError);
  CHECK_THROWS_AS(c.set("train.alpha", "abc"), ValidationError);
  CHECK_THROWS_AS(c.set("train.ablation", "kk"), ValidationError);
  CHECK_THROWS_AS(c.set("train.batch_size", "-3"), ValidationError);
}

TEST_CASE("config files and overrides") {
  const fs::path dir = scratch("cfgfile");
  atomic_write_text(dir / "a.cfg", "# comment\n\ntrain.alpha = 3  # trailing\ntrain.beta=0.5\n");
  ResolvedConfig c = ResolvedConfig::defaults_for("train");
  apply_config_file(c, dir / "a.cfg");
  CHECK(c.train.alpha == 3.0);
  CHECK(c.train.beta == 0.5);
  apply_overrides(c, {"--train.alpha", "4", "--train.gamma=0.2"});
  CHECK(c.train.alpha == 4.0);
  CHECK(c.train.gamma == 0.2);
  CHECK_THROWS_AS(apply_overrides(c, {"--train.alpha"}), ValidationError);
  CHECK_THROWS_AS(apply_overrides(c, {"stray"}), ValidationError);

  atomic_write_text(dir / "b.cfg", "train.alpha = 1\nnot a pair\n");
  try {
    apply_config_file(c, dir / "b.cfg");
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(apply_config_file(c, dir / "missing.cfg"), IoError);

  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("subcommand defaults") {
  const auto mi = ResolvedConfig::defaults_for("gaussian-mi");
  CHECK(mi.train.lr == 5e-3);
  CHECK(mi.train.batch_size == 256);
  const auto cross = ResolvedConfig::defaults_for("cross-eval");
  CHECK(cross.data.rotation_deg == 30.0);
  REQUIRE(cross.data.third_rotation_deg.has_value());
  CHECK(*cross.data.third_rotation_deg == 60.0);
  const auto train = ResolvedConfig::defaults_for("train");
  CHECK(train.train.alpha == 1.0);
  CHECK(train.train.beta == 0.01);
  CHECK(train.train.lr == 1e-3);
  CHECK(train.train.batch_size == 32);
  CHECK(train.data.rotation_deg == 45.0);
}

TEST_CASE("atomic writes") {
  const fs::path dir = scratch("atomic");
  atomic_write_text(dir / "deep" / "x.txt", "one");
  atomic_write_text(dir / "deep" / "x.txt", "two");
  CHECK(slurp(dir / "deep" / "x.txt") == "two");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "deep")) ++files;
  CHECK(files == 1);
  CHECK_THROWS_AS(atomic_write_text("/proc/infomaxda/x.txt", "x"), IoError);
}

TEST_CASE("metrics csv layout") {
  MetricsRecord r;
  r.epoch = 1;
  r.l_cls = 0.5;
  r.target_acc = std::numeric_limits<double>::quiet_NaN();
  const std::vector<MetricsRecord> h{r};
  CHECK(metrics_csv(h) == std::string(kMetricsHeader) + "\n1,0.5,0,0,0,0,0,0,nan\n");
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("exit");
  CHECK(cli({"gaussian-mi", "--rho", "1.5", "--out", (dir / "a").string()}).code == kExitValidation);
  CHECK(cli({"train", "--data.kind", "csv", "--data.source_path", "/nonexistent.csv", "--data.target_path",
             "/nonexistent_t.csv", "--out", (dir / "b").string()})
            .code == kExitIo);
  CHECK(cli({"oracle", "--instances", "0", "--out", (dir / "c").string()}).code == kExitValidation);
  CHECK(cli({"gradcheck", "--loss", "bogus", "--out", (dir / "d").string()}).code == kExitValidation);
  CHECK(cli({"frobnicate"}).code == kExitValidation);
  CHECK(cli({"train", "--config", (dir / "none.cfg").string(), "--out", (dir / "e").string()}).code == kExitIo);
  CHECK(cli({"train", "--train.lr", "1e308", "--train.model_clip_norm", "0", "--data.n", "60", "--epochs", "1",
             "--out", (dir / "f").string()})
            .code == kExitNumerical);
  const nlohmann::json manifest = read_json(dir / "a" / "manifest.json");
  CHECK(manifest["exit_status"] == kExitValidation);
  CHECK(manifest["error"].get<std::string>().find("rho") != std::string::npos);
}

TEST_CASE("oracle and gradcheck subcommands") {
  const fs::path dir = scratch("oracle");
  const CliRun ok = cli({"oracle", "--instances", "50", "--out", dir.string()});
  CHECK(ok.code == kExitOk);
  const nlohmann::json reports = read_json(dir / "oracle.json");
  CHECK(reports.size() == 4);
  CHECK(reports[0].contains("max_abs_violation"));
  CHECK(cli({"oracle", "--suite", "infomax", "--instances", "5", "--tolerance-override", "-1", "--out",
             (dir / "strict").string()})
            .code == kExitCheckFailed);
  CHECK(cli({"gradcheck", "--loss", "kld", "--seed", "1", "--out", (dir / "gc").string()}).code == kExitOk);
  CHECK(read_json(dir / "gc" / "gradcheck.json")["name"] == "gradcheck:kld");
}

TEST_CASE("train artifacts and manifest") {
  const fs::path dir = scratch("train");
  REQUIRE(cli(with({"train", "--out", dir.string()}, kSmallTrain)).code == kExitOk);
  const std::string csv = slurp(dir / "metrics.csv");
  CHECK(csv.starts_with(std::string(kMetricsHeader) + "\n1,"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  const nlohmann::json m = read_json(dir / "manifest.json");
  CHECK(m["subcommand"] == "train");
  CHECK(m["exit_status"] == 0);
  CHECK(m["resolved_config"]["train.epochs"] == "2");
  CHECK(m.contains("started_at"));
  CHECK(m["artifacts"].size() >= 3);
  CHECK(read_json(dir / "summary.json").contains("target_acc"));
}

TEST_CASE("identical config reproduces metrics byte for byte") {
  const fs::path a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  REQUIRE(cli(with({"train", "--out", a.string()}, kSmallTrain)).code == kExitOk);
  REQUIRE(cli(with({"train", "--out", b.string()}, kSmallTrain)).code == kExitOk);
  CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
  // Feeding the resolved config back in gives the same run.
  REQUIRE(cli({"train", "--config", (a / "resolved_config.cfg").string(), "--out", c.string()}).code == kExitOk);
  CHECK(slurp(a / "metrics.csv") == slurp(c / "metrics.csv"));
}

TEST_CASE("output root from the environment") {
  const fs::path root = scratch("env");
  setenv("INFOMAXDA_OUT", root.string().c_str(), 1);
  CHECK(default_output_root() == root);
  CHECK(cli({"gradcheck", "--loss", "ent"}).code == kExitOk);
  CHECK(fs::exists(root / "gradcheck" / "manifest.json"));
  unsetenv("INFOMAXDA_OUT");
  CHECK(default_output_root() == "runs");
}

TEST_CASE("gaussian-mi and cross-eval outputs") {
  const fs::path dir = scratch("gmi");
  REQUIRE(cli({"gaussian-mi", "--n", "2000", "--epochs", "2", "--out", dir.string()}).code == kExitOk);
  const std::string curve = slurp(dir / "mi_curve.csv");
  CHECK(curve.starts_with("epoch,estimate,true_mi\n1,"));
  CHECK(read_json(dir / "summary.json").contains("final_estimate"));

  const fs::path cross = scratch("cross");
  REQUIRE(cli(with({"cross-eval", "--out", cross.string()}, kSmallTrain)).code == kExitOk);
  CHECK(slurp(cross / "curves.csv").starts_with("epoch,target_acc,third_acc\n"));
  const nlohmann::json s = read_json(cross / "summary.json");
  CHECK(s.contains("third_acc"));
  CHECK((s["pearson_r"].is_number() || s.contains("pearson_reason")));
}
