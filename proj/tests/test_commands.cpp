#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lmsx/commands.hpp"
#include "lmsx/errors.hpp"

using namespace lmsx;

namespace {

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

std::filesystem::path fresh_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

ExperimentConfig blob_experiment(const std::filesystem::path& out, int m, long iterations) {
  std::ostringstream text;
  text << "[data]\nsource = blobs\nclasses = 3\ndim = 2\nn_per_class = 60\nspread = 0.3\n"
       << "split = 1.0,0.0,0.0\n"
       << "[network]\nlayers = \nfeature_dim = 2\n"
       << "[loss]\nm = " << m << "\nlambda_initial = 100\nlambda_min = 1\n"
       << "lambda_gamma = 0.5\nlambda_window = 10\n"
       << "[optim]\nlearning_rate = 0.05\nmomentum = 0.9\nweight_decay = 0.0005\n"
       << "batch_size = 32\nmax_iterations = " << iterations << "\nseed = 5\n"
       << "[output]\ndir = " << out.string() << "\n";
  return parse_config_text(text.str());
}

}  // namespace

TEST_SUITE_BEGIN("commands");

TEST_CASE("md5 matches the published test vectors") {
  CHECK(md5_hex({}) == "d41d8cd98f00b204e9800998ecf8427e");
  const std::string abc = "abc";
  CHECK(md5_hex(std::span<const std::uint8_t>(
            reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size())) ==
        "900150983cd24fb0d6963f7d28e17f72");
}

TEST_CASE("fetch downloads, keeps, and repairs files by checksum") {
  const auto dir = fresh_dir("lmsx_fetch_test");
  const std::vector<std::uint8_t> payload_a{1, 2, 3};
  const std::vector<std::uint8_t> payload_b{9, 8, 7, 6};
  DatasetRegistry registry;
  registry.name = "toy";
  registry.files = {{"a.bin", "http://example/a.bin", md5_hex(payload_a)},
                    {"b.bin", "http://example/b.bin", md5_hex(payload_b)}};
  int calls = 0;
  Downloader downloader = [&](const std::string& url) -> std::vector<std::uint8_t> {
    ++calls;
    if (url.ends_with("a.bin")) return payload_a;
    if (url.ends_with("b.bin")) return payload_b;
    throw NetworkFailureError("unexpected url " + url);
  };

  std::ostringstream log;
  const FetchResult first = fetch_dataset(registry, dir, downloader, log);
  CHECK(first.downloaded == 2);
  CHECK(first.kept == 0);
  CHECK(calls == 2);
  CHECK(file_bytes(dir / "a.bin") == payload_a);

  const FetchResult second = fetch_dataset(registry, dir, downloader, log);
  CHECK(second.downloaded == 0);
  CHECK(second.kept == 2);
  CHECK(calls == 2);  // no re-download

  // corrupt one file on disk; it is reported and re-downloaded
  std::ofstream(dir / "a.bin", std::ios::binary) << "corrupt";
  std::ostringstream repair_log;
  const FetchResult third = fetch_dataset(registry, dir, downloader, repair_log);
  CHECK(third.downloaded == 1);
  CHECK(third.kept == 1);
  CHECK(calls == 3);
  CHECK(repair_log.str().find("checksum mismatch") != std::string::npos);
  CHECK(file_bytes(dir / "a.bin") == payload_a);
  std::filesystem::remove_all(dir);
}

TEST_CASE("fetch rejects downloads whose checksum is wrong") {
  const auto dir = fresh_dir("lmsx_fetch_bad");
  DatasetRegistry registry;
  registry.files = {{"a.bin", "http://example/a.bin", "00000000000000000000000000000000"}};
  Downloader downloader = [](const std::string&) {
    return std::vector<std::uint8_t>{1, 2, 3};
  };
  std::ostringstream log;
  CHECK_THROWS_AS(fetch_dataset(registry, dir, downloader, log), ChecksumMismatchError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("the builtin registry names the four canonical files") {
  const DatasetRegistry registry = mnist_registry();
  REQUIRE(registry.files.size() == 4);
  CHECK(registry.files[0].filename == "train-images-idx3-ubyte.gz");
  CHECK(registry.files[3].filename == "t10k-labels-idx1-ubyte.gz");
  for (const auto& f : registry.files) CHECK(f.md5_hex.size() == 32);
}

TEST_CASE("train writes every artifact and metrics row") {
  const auto out = fresh_dir("lmsx_train_artifacts");
  const ExperimentConfig config = blob_experiment(out, 2, 40);
  std::ostringstream log;
  const TrainArtifacts artifacts = cmd_train(config, log);

  CHECK(std::filesystem::exists(artifacts.metrics_csv));
  CHECK(std::filesystem::exists(artifacts.params));
  CHECK(std::filesystem::exists(artifacts.resolved_config));
  REQUIRE(artifacts.features_train.has_value());
  CHECK(std::filesystem::exists(*artifacts.features_train));
  CHECK_FALSE(artifacts.features_test.has_value());  // all-train split

  const auto rows = read_csv(artifacts.metrics_csv);
  REQUIRE(rows.size() == 41);  // header + one row per iteration
  CHECK(rows[0] == std::vector<std::string>{"iteration", "lambda", "learning_rate",
                                            "train_loss", "val_error"});
  CHECK(rows[1][0] == "0");
  CHECK(std::stod(rows[1][1]) == 100.0);

  // resolved config reparses to the same effective values
  const ExperimentConfig echoed = parse_config_file(artifacts.resolved_config);
  CHECK(resolved_config_text(echoed) == resolved_config_text(config));
  std::filesystem::remove_all(out);
}

TEST_CASE("training twice with one seed is byte-identical") {
  const auto out_a = fresh_dir("lmsx_det_a");
  const auto out_b = fresh_dir("lmsx_det_b");
  std::ostringstream log;
  const TrainArtifacts a = cmd_train(blob_experiment(out_a, 3, 30), log);
  const TrainArtifacts b = cmd_train(blob_experiment(out_b, 3, 30), log);
  CHECK(file_bytes(a.params) == file_bytes(b.params));
  CHECK(file_bytes(a.metrics_csv) == file_bytes(b.metrics_csv));
  std::filesystem::remove_all(out_a);
  std::filesystem::remove_all(out_b);
}

TEST_CASE("eval reports accuracy and writes the analysis files") {
  const auto out = fresh_dir("lmsx_eval_test");
  ExperimentConfig config = blob_experiment(out, 1, 150);
  std::ostringstream log;
  const TrainArtifacts artifacts = cmd_train(config, log);

  config.data.pairs = 50;
  const EvalReport report = cmd_eval(artifacts.params, config, log);
  CHECK(report.accuracy >= 0.99);  // evaluates the train split when test is empty
  CHECK(std::filesystem::exists(report.confusion_csv));
  CHECK(std::filesystem::exists(report.angular_stats_csv));
  REQUIRE(report.verification_csv.has_value());
  const auto verification = read_csv(*report.verification_csv);
  CHECK(verification.size() == 1002);  // header + 1001 grid points
  CHECK(verification[0] ==
        std::vector<std::string>{"threshold", "accuracy", "tpr", "fpr"});

  const auto confusion = read_csv(report.confusion_csv);
  REQUIRE(confusion.size() == 4);  // header + 3 classes
  CHECK(confusion[0] == std::vector<std::string>{"class", "c0", "c1", "c2"});
  std::filesystem::remove_all(out);
}

TEST_CASE("eval rejects parameters that do not fit the network") {
  const auto out = fresh_dir("lmsx_eval_mismatch");
  const ExperimentConfig trained = blob_experiment(out, 1, 10);
  std::ostringstream log;
  const TrainArtifacts artifacts = cmd_train(trained, log);

  ExperimentConfig wider = trained;
  wider.data.dim = 4;  // identity net now expects feature_dim 4
  wider.feature_dim = 4;
  try {
    cmd_eval(artifacts.params, wider, log);
    FAIL("expected ShapeMismatchError");
  } catch (const ShapeMismatchError& e) {
    const std::string what = e.what();
    CHECK(what.find("classifier") != std::string::npos);
    CHECK(what.find("4") != std::string::npos);
    CHECK(what.find("2") != std::string::npos);
  }
  std::filesystem::remove_all(out);
}

TEST_CASE("state serialization round-trips through named tensors") {
  const auto out = fresh_dir("lmsx_state_rt");
  std::ostringstream text;
  text << "[data]\nsource = blobs\nclasses = 2\ndim = 2\nn_per_class = 20\nspread = 0.2\n"
       << "split = 1.0,0.0,0.0\n"
       << "[network]\nlayers = dense 6; prelu; dense 2\nfeature_dim = 2\n"
       << "[optim]\nlearning_rate = 0.01\nbatch_size = 8\nmax_iterations = 5\nseed = 3\n"
       << "[output]\ndir = " << out.string() << "\n";
  const ExperimentConfig config = parse_config_text(text.str());
  std::ostringstream log;
  const TrainArtifacts artifacts = cmd_train(config, log);

  const NetworkSpec spec = resolve_network(config, input_shape_of(config));
  const auto tensors = load_params(artifacts.params);
  const TrainState state = tensors_to_state(spec, 2, tensors);
  const auto again = state_to_tensors(spec, state);
  REQUIRE(again.size() == tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    CHECK(again[i].name == tensors[i].name);
    CHECK(again[i].value == tensors[i].value);
  }
  std::filesystem::remove_all(out);
}

TEST_CASE("a freshly initialized 10-class model evaluates near chance") {
  const auto out = fresh_dir("lmsx_untrained_eval");
  std::ostringstream text;
  text << "[data]\nsource = blobs\nclasses = 10\ndim = 8\nn_per_class = 200\nspread = 3.0\n"
       << "split = 1.0,0.0,0.0\n"
       << "[network]\nlayers = \nfeature_dim = 8\n"
       << "[optim]\nmax_iterations = 0\nbatch_size = 32\nseed = 21\n"
       << "[output]\ndir = " << out.string() << "\n";
  const ExperimentConfig config = parse_config_text(text.str());
  std::ostringstream log;
  const TrainArtifacts artifacts = cmd_train(config, log);
  const EvalReport report = cmd_eval(artifacts.params, config, log);
  CHECK(report.accuracy >= 0.1 - 0.05);
  CHECK(report.accuracy <= 0.1 + 0.05);
  std::filesystem::remove_all(out);
}

TEST_CASE("LMSX_DATA_DIR overrides the configured mnist directory") {
  const auto fixtures = std::filesystem::path(LMSX_SOURCE_DIR) / "data" / "mnist10k";
  std::ostringstream text;
  text << "[data]\nsource = mnist\ndir = /nonexistent/nowhere\nsplit = 1.0,0.0,0.0\n"
       << "subset_train = 100\nsubset_test = 50\n"
       << "[network]\nlayers = flatten\nfeature_dim = 784\n"
       << "[optim]\nbatch_size = 16\nmax_iterations = 0\nseed = 1\n";
  const ExperimentConfig config = parse_config_text(text.str());
  CHECK_THROWS_AS(load_dataset(config), IoError);
  setenv("LMSX_DATA_DIR", fixtures.c_str(), 1);
  const DatasetSplit data = load_dataset(config);
  unsetenv("LMSX_DATA_DIR");
  CHECK(data.train.size() == 100);
  CHECK(data.test.size() == 50);
}

TEST_CASE("gradcheck command passes at 1e-6 and fails at 1e-15") {
  std::ostringstream log;
  const GradcheckOutcome pass = cmd_gradcheck({1, 2}, {11, 12}, 1e-6, log);
  CHECK(pass.all_passed);
  CHECK(pass.rows.size() == 4);
  CHECK(log.str().find("pass") != std::string::npos);

  const GradcheckOutcome fail = cmd_gradcheck({2}, {11}, 1e-15, log);
  CHECK_FALSE(fail.all_passed);
}

TEST_CASE("figure1 trains all four margins and writes the summary") {
  const auto out = fresh_dir("lmsx_fig1_test");
  ExperimentConfig config = blob_experiment(out, 1, 25);
  std::ostringstream log;
  const Figure1Outcome outcome = cmd_figure1(config, 123, log);

  REQUIRE(outcome.feature_files.size() == 4);
  for (const auto& path : outcome.feature_files) {
    const auto rows = read_csv(path);
    CHECK(rows.size() == 1 + 180);  // header + train-split rows (60 per class x 3)
  }
  const auto summary = read_csv(outcome.summary_csv);
  REQUIRE(summary.size() == 5);
  CHECK(summary[0] == std::vector<std::string>{"m", "min_interclass_angle", "max_spread",
                                               "mean_spread", "margin_proxy"});
  for (int m = 1; m <= 4; ++m) CHECK(summary[static_cast<std::size_t>(m)][0] == std::to_string(m));

  ExperimentConfig bad = config;
  bad.feature_dim = 3;
  CHECK_THROWS_AS(cmd_figure1(bad, 1, log), ConfigError);
  std::filesystem::remove_all(out);
}

TEST_SUITE_END();
