#include "lmsx/config.hpp"

#include <cstdlib>
#include <sstream>

#include "lmsx/errors.hpp"
#include "lmsx/serialize.hpp"

namespace lmsx {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_key(const std::string& key, const std::string& section, int line) {
  throw ConfigError("unknown key '" + key + "' in section [" + section + "] at line " +
                    std::to_string(line));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, int line,
                            const std::string& expected) {
  throw ConfigError("key '" + key + "' at line " + std::to_string(line) + " has value '" +
                    value + "', expected " + expected);
}

double parse_double(const std::string& key, const std::string& value, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    bad_value(key, value, line, "a number");
  }
}

long parse_long(const std::string& key, const std::string& value, int line) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    bad_value(key, value, line, "an integer");
  }
}

std::size_t parse_size(const std::string& key, const std::string& value, int line) {
  const long v = parse_long(key, value, line);
  if (v < 0) bad_value(key, value, line, "a nonnegative integer");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> split_list(const std::string& value, char sep) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section at line " + std::to_string(line_no));
      section = line.substr(1, line.size() - 2);
      if (section != "data" && section != "network" && section != "loss" &&
          section != "optim" && section != "output") {
        throw ConfigError("unknown section [" + section + "] at line " + std::to_string(line_no));
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key=value at line " + std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) {
      throw ConfigError("key '" + key + "' before any section at line " + std::to_string(line_no));
    }

    if (section == "data") {
      if (key == "source") {
        if (value != "blobs" && value != "mnist") bad_value(key, value, line_no, "blobs or mnist");
        config.data.source = value;
      } else if (key == "dir") {
        config.data.dir = value;
      } else if (key == "classes") {
        config.data.classes = static_cast<int>(parse_long(key, value, line_no));
      } else if (key == "dim") {
        config.data.dim = parse_size(key, value, line_no);
      } else if (key == "n_per_class") {
        config.data.n_per_class = parse_size(key, value, line_no);
      } else if (key == "spread") {
        config.data.spread = parse_double(key, value, line_no);
      } else if (key == "split") {
        const auto parts = split_list(value, ',');
        if (parts.size() != 3) bad_value(key, value, line_no, "three comma-separated fractions");
        for (int i = 0; i < 3; ++i) config.data.split[i] = parse_double(key, parts[i], line_no);
      } else if (key == "subset_train") {
        config.data.subset_train = parse_size(key, value, line_no);
      } else if (key == "subset_test") {
        config.data.subset_test = parse_size(key, value, line_no);
      } else if (key == "pairs") {
        config.data.pairs = parse_size(key, value, line_no);
      } else {
        bad_key(key, section, line_no);
      }
    } else if (section == "network") {
      if (key == "layers") {
        config.layers_text = value;
      } else if (key == "feature_dim") {
        config.feature_dim = parse_size(key, value, line_no);
      } else {
        bad_key(key, section, line_no);
      }
    } else if (section == "loss") {
      if (key == "m") {
        const long m = parse_long(key, value, line_no);
        if (m < 1) bad_value(key, value, line_no, "an integer >= 1");
        config.m = static_cast<int>(m);
      } else if (key == "lambda_initial") {
        config.lambda_schedule.initial = parse_double(key, value, line_no);
      } else if (key == "lambda_min") {
        config.lambda_schedule.min = parse_double(key, value, line_no);
      } else if (key == "lambda_gamma") {
        const double g = parse_double(key, value, line_no);
        if (g <= 0.0 || g > 1.0) bad_value(key, value, line_no, "a factor in (0, 1]");
        config.lambda_schedule.gamma = g;
      } else if (key == "lambda_window") {
        const long w = parse_long(key, value, line_no);
        if (w < 1) bad_value(key, value, line_no, "an integer >= 1");
        config.lambda_schedule.window = w;
      } else {
        bad_key(key, section, line_no);
      }
    } else if (section == "optim") {
      if (key == "learning_rate") {
        const double lr = parse_double(key, value, line_no);
        if (lr <= 0.0) bad_value(key, value, line_no, "a positive number");
        config.optim.learning_rate = lr;
      } else if (key == "lr_drops") {
        config.optim.lr_drop_iterations.clear();
        for (const auto& item : split_list(value, ',')) {
          config.optim.lr_drop_iterations.push_back(parse_long(key, item, line_no));
        }
      } else if (key == "lr_drop_factor") {
        config.optim.lr_drop_factor = parse_double(key, value, line_no);
      } else if (key == "momentum") {
        const double mu = parse_double(key, value, line_no);
        if (mu < 0.0 || mu >= 1.0) bad_value(key, value, line_no, "a value in [0, 1)");
        config.optim.momentum = mu;
      } else if (key == "weight_decay") {
        const double wd = parse_double(key, value, line_no);
        if (wd < 0.0) bad_value(key, value, line_no, "a nonnegative number");
        config.optim.weight_decay = wd;
      } else if (key == "batch_size") {
        const std::size_t b = parse_size(key, value, line_no);
        if (b == 0) bad_value(key, value, line_no, "a positive integer");
        config.optim.batch_size = b;
      } else if (key == "max_iterations") {
        config.optim.max_iterations = parse_long(key, value, line_no);
      } else if (key == "seed") {
        config.optim.seed = static_cast<std::uint64_t>(parse_long(key, value, line_no));
      } else if (key == "eval_interval") {
        config.optim.eval_interval = parse_long(key, value, line_no);
      } else {
        bad_key(key, section, line_no);
      }
    } else if (section == "output") {
      if (key == "dir") {
        config.output_dir = value;
      } else {
        bad_key(key, section, line_no);
      }
    }
  }

  config.optim.margin = Margin(config.m);
  config.optim.lambda_schedule = config.lambda_schedule;
  if (config.lambda_schedule.initial < config.lambda_schedule.min) {
    throw ConfigError("lambda_initial must be >= lambda_min");
  }
  return config;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  return parse_config_text(read_text_file(path));
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string resolved_config_text(const ExperimentConfig& config) {
  std::ostringstream out;
  out << "[data]\n";
  out << "source = " << config.data.source << "\n";
  out << "dir = " << config.data.dir.string() << "\n";
  out << "classes = " << config.data.classes << "\n";
  out << "dim = " << config.data.dim << "\n";
  out << "n_per_class = " << config.data.n_per_class << "\n";
  out << "spread = " << format_double(config.data.spread) << "\n";
  out << "split = " << format_double(config.data.split[0]) << ","
      << format_double(config.data.split[1]) << "," << format_double(config.data.split[2])
      << "\n";
  out << "subset_train = " << config.data.subset_train << "\n";
  out << "subset_test = " << config.data.subset_test << "\n";
  out << "pairs = " << config.data.pairs << "\n";
  out << "\n[network]\n";
  out << "layers = " << config.layers_text << "\n";
  out << "feature_dim = " << config.feature_dim << "\n";
  out << "\n[loss]\n";
  out << "m = " << config.m << "\n";
  out << "lambda_initial = " << format_double(config.lambda_schedule.initial) << "\n";
  out << "lambda_min = " << format_double(config.lambda_schedule.min) << "\n";
  out << "lambda_gamma = " << format_double(config.lambda_schedule.gamma) << "\n";
  out << "lambda_window = " << config.lambda_schedule.window << "\n";
  out << "\n[optim]\n";
  out << "learning_rate = " << format_double(config.optim.learning_rate) << "\n";
  out << "lr_drops = ";
  for (std::size_t i = 0; i < config.optim.lr_drop_iterations.size(); ++i) {
    if (i) out << ",";
    out << config.optim.lr_drop_iterations[i];
  }
  out << "\n";
  out << "lr_drop_factor = " << format_double(config.optim.lr_drop_factor) << "\n";
  out << "momentum = " << format_double(config.optim.momentum) << "\n";
  out << "weight_decay = " << format_double(config.optim.weight_decay) << "\n";
  out << "batch_size = " << config.optim.batch_size << "\n";
  out << "max_iterations = " << config.optim.max_iterations << "\n";
  out << "seed = " << config.optim.seed << "\n";
  out << "eval_interval = " << config.optim.eval_interval << "\n";
  out << "\n[output]\n";
  out << "dir = " << config.output_dir.string() << "\n";
  return out.str();
}

NetworkSpec resolve_network(const ExperimentConfig& config,
                            const std::vector<std::size_t>& input_shape) {
  NetworkSpec spec;
  spec.input_shape = input_shape;
  spec.feature_dim = config.feature_dim;

  auto current = input_shape;
  auto current_width = [&current]() { return shape_product(current); };

  for (const std::string& item : split_list(config.layers_text, ';')) {
    const auto tokens = split_list(item, ' ');
    if (tokens.empty()) continue;
    const std::string& kind = tokens[0];
    if (kind == "conv") {
      if (current.size() != 3) {
        throw ConfigError("layer '" + item + "' needs a C x H x W input, have " +
                          shape_to_string(current));
      }
      if (tokens.size() < 3) throw ConfigError("layer '" + item + "': usage conv KxK C [xN] [stride S] [pad P]");
      const auto x_pos = tokens[1].find('x');
      if (x_pos == std::string::npos) throw ConfigError("layer '" + item + "': kernel must look like 5x5");
      const std::string ka = tokens[1].substr(0, x_pos), kb = tokens[1].substr(x_pos + 1);
      if (ka != kb) throw ConfigError("layer '" + item + "': only square kernels are supported");
      ConvSpec conv;
      conv.kernel = parse_size("conv kernel", ka, 0);
      conv.out_channels = parse_size("conv channels", tokens[2], 0);
      std::size_t repeat = 1;
      for (std::size_t t = 3; t < tokens.size(); ++t) {
        if (tokens[t].size() > 1 && tokens[t][0] == 'x') {
          repeat = parse_size("conv repeat", tokens[t].substr(1), 0);
        } else if (tokens[t] == "stride" && t + 1 < tokens.size()) {
          conv.stride = parse_size("conv stride", tokens[++t], 0);
        } else if (tokens[t] == "pad" && t + 1 < tokens.size()) {
          conv.padding = parse_size("conv padding", tokens[++t], 0);
        } else {
          throw ConfigError("layer '" + item + "': unrecognized token '" + tokens[t] + "'");
        }
      }
      if (conv.kernel == 0 || conv.out_channels == 0 || conv.stride == 0 || repeat == 0) {
        throw ConfigError("layer '" + item + "': kernel, channels, stride and repeat must be positive");
      }
      for (std::size_t r = 0; r < repeat; ++r) {
        conv.in_channels = current[0];
        spec.layers.push_back(LayerSpec::conv2d(conv));
        current = {conv.out_channels, conv.out_extent(current[1]), conv.out_extent(current[2])};
        spec.layers.push_back(LayerSpec::prelu(conv.out_channels));
      }
    } else if (kind == "pool") {
      if (tokens.size() != 1) throw ConfigError("layer '" + item + "': pool takes no arguments");
      if (current.size() != 3) {
        throw ConfigError("layer '" + item + "' needs a C x H x W input, have " +
                          shape_to_string(current));
      }
      spec.layers.push_back(LayerSpec::maxpool());
      current = {current[0], current[1] / 2, current[2] / 2};
    } else if (kind == "flatten") {
      spec.layers.push_back(LayerSpec::flatten());
      current = {current_width()};
    } else if (kind == "dense") {
      if (tokens.size() != 2) throw ConfigError("layer '" + item + "': usage dense WIDTH");
      if (current.size() != 1) {
        throw ConfigError("layer '" + item + "' needs a flat input, have " +
                          shape_to_string(current) + " (insert 'flatten')");
      }
      const std::size_t width = parse_size("dense width", tokens[1], 0);
      if (width == 0) throw ConfigError("layer '" + item + "': width must be positive");
      spec.layers.push_back(LayerSpec::dense(current[0], width));
      current = {width};
    } else if (kind == "prelu") {
      if (tokens.size() != 1) throw ConfigError("layer '" + item + "': prelu takes no arguments");
      spec.layers.push_back(LayerSpec::prelu(current[0]));
    } else {
      throw ConfigError("unknown layer kind '" + kind + "' in '" + item + "'");
    }
  }
  validate_network(spec);
  return spec;
}

std::vector<std::size_t> input_shape_of(const ExperimentConfig& config) {
  if (config.data.source == "mnist") return {1, 28, 28};
  return {config.data.dim};
}

DatasetSplit load_dataset(const ExperimentConfig& config) {
  if (config.data.source == "mnist") {
    std::filesystem::path dir = config.data.dir;
    if (const char* env = std::getenv("LMSX_DATA_DIR")) dir = env;
    if (dir.empty()) throw ConfigError("[data] dir is required for source = mnist");
    return load_mnist(MnistPaths::in_dir(dir), config.data.split, config.optim.seed,
                      config.data.subset_train, config.data.subset_test);
  }
  return make_blobs(config.data.n_per_class, config.data.classes, config.data.dim,
                    config.data.spread, config.optim.seed, config.data.split);
}

}  // namespace lmsx
