#include "sgm/run_config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "sgm/errors.hpp"

namespace sgm {

std::string to_string(Command command) {
  switch (command) {
    case Command::build_vocab: return "build-vocab";
    case Command::train: return "train";
    case Command::evaluate: return "evaluate";
    case Command::predict: return "predict";
    case Command::ablate: return "ablate";
  }
  return "?";
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long n = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    n = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(n);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return d;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing required ") + what + " path");
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError(std::string(what) + " file not found: " + path);
  }
}

void require_output(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing required ") + what + " path");
}

}  // namespace

std::map<std::string, std::string> parse_kv(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    for (char& c : key) if (c == '-') c = '_';
    out[key] = trim(std::string_view(line).substr(eq + 1));
    if (end == text.size()) break;
  }
  return out;
}

void RunConfig::apply_kv(std::string_view text) {
  for (const auto& [key, v] : parse_kv(text)) {
    if (key == "embedding_size") model.embedding_size = to_size(key, v);
    else if (key == "encoder_hidden") model.encoder_hidden = to_size(key, v);
    else if (key == "decoder_hidden") model.decoder_hidden = to_size(key, v);
    else if (key == "encoder_layers") model.encoder_layers = to_size(key, v);
    else if (key == "decoder_layers") model.decoder_layers = to_size(key, v);
    else if (key == "dropout") model.dropout = to_double(key, v);
    else if (key == "ge_mode") model.ge_mode = parse_global_embedding_mode(v);
    else if (key == "lambda") model.lambda = to_double(key, v);
    else if (key == "init_scale") model.init_scale = to_double(key, v);
    else if (key == "epochs") train.epochs = to_size(key, v);
    else if (key == "batch_size") train.batch_size = to_size(key, v);
    else if (key == "lr") train.adam.learning_rate = to_double(key, v);
    else if (key == "beta1") train.adam.beta1 = to_double(key, v);
    else if (key == "beta2") train.adam.beta2 = to_double(key, v);
    else if (key == "adam_eps") train.adam.epsilon = to_double(key, v);
    else if (key == "clip_norm") train.clip_norm = to_double(key, v);
    else if (key == "seed") train.seed = to_size(key, v);
    else if (key == "shuffle_batches") train.shuffle_batches = to_bool(key, v);
    else if (key == "no_mask") ablation.no_mask = to_bool(key, v);
    else if (key == "shuffle_labels") ablation.shuffle_labels = to_bool(key, v);
    else if (key == "train") train_path = v;
    else if (key == "valid") valid_path = v;
    else if (key == "test") test_path = v;
    else if (key == "input") input_path = v;
    else if (key == "vocab") vocab_path = v;
    else if (key == "labels") labels_path = v;
    else if (key == "checkpoint") checkpoint_path = v;
    else if (key == "output") output_path = v;
    else if (key == "report") report_path = v;
    else if (key == "attn") attn_path = v;
    else if (key == "vocab_size") vocab_size = to_size(key, v);
    else if (key == "max_len") max_len = to_size(key, v);
    else if (key == "beam") beam_size = to_size(key, v);
    else if (key == "max_steps") max_steps = to_size(key, v);
    else if (key == "lls_buckets") lls_buckets = to_bool(key, v);
    else if (key == "greedy") greedy = to_bool(key, v);
    else if (key == "lambda_list") {
      lambda_list.clear();
      for (const auto& item : split_list(v)) lambda_list.push_back(to_double(key, item));
    } else if (key == "variants") {
      variants = split_list(v);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

RunConfig RunConfig::from_kv(std::string_view text) {
  RunConfig c;
  c.apply_kv(text);
  return c;
}

std::string RunConfig::to_kv() const {
  std::ostringstream o;
  auto b = [](bool x) { return x ? "true" : "false"; };
  o << "embedding_size=" << model.embedding_size << '\n'
    << "encoder_hidden=" << model.encoder_hidden << '\n'
    << "decoder_hidden=" << model.decoder_hidden << '\n'
    << "encoder_layers=" << model.encoder_layers << '\n'
    << "decoder_layers=" << model.decoder_layers << '\n'
    << "dropout=" << format_double(model.dropout) << '\n'
    << "ge_mode=" << to_string(model.ge_mode) << '\n'
    << "lambda=" << format_double(model.lambda) << '\n'
    << "init_scale=" << format_double(model.init_scale) << '\n'
    << "epochs=" << train.epochs << '\n'
    << "batch_size=" << train.batch_size << '\n'
    << "lr=" << format_double(train.adam.learning_rate) << '\n'
    << "beta1=" << format_double(train.adam.beta1) << '\n'
    << "beta2=" << format_double(train.adam.beta2) << '\n'
    << "adam_eps=" << format_double(train.adam.epsilon) << '\n'
    << "clip_norm=" << format_double(train.clip_norm) << '\n'
    << "seed=" << train.seed << '\n'
    << "shuffle_batches=" << b(train.shuffle_batches) << '\n'
    << "no_mask=" << b(ablation.no_mask) << '\n'
    << "shuffle_labels=" << b(ablation.shuffle_labels) << '\n'
    << "train=" << train_path << '\n'
    << "valid=" << valid_path << '\n'
    << "test=" << test_path << '\n'
    << "input=" << input_path << '\n'
    << "vocab=" << vocab_path << '\n'
    << "labels=" << labels_path << '\n'
    << "checkpoint=" << checkpoint_path << '\n'
    << "output=" << output_path << '\n'
    << "report=" << report_path << '\n'
    << "attn=" << attn_path << '\n'
    << "vocab_size=" << vocab_size << '\n'
    << "max_len=" << max_len << '\n'
    << "beam=" << beam_size << '\n'
    << "max_steps=" << max_steps << '\n'
    << "lls_buckets=" << b(lls_buckets) << '\n'
    << "greedy=" << b(greedy) << '\n';
  o << "lambda_list=";
  for (std::size_t i = 0; i < lambda_list.size(); ++i) o << (i ? "," : "") << format_double(lambda_list[i]);
  o << '\n' << "variants=";
  for (std::size_t i = 0; i < variants.size(); ++i) o << (i ? "," : "") << variants[i];
  o << '\n';
  return o.str();
}

ModelConfig RunConfig::effective_model() const {
  ModelConfig m = model;
  m.use_mask = !ablation.no_mask;
  return m;
}

void RunConfig::validate(Command command) const {
  effective_model().validate();
  train.validate();
  if (vocab_size < 1) throw ConfigError("vocab_size must be at least 1");
  if (max_len < 1) throw ConfigError("max_len must be at least 1");
  if (beam_size < 1) throw ConfigError("beam size must be at least 1");
  for (double l : lambda_list) {
    if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("lambda-list values must lie in [0, 1]");
  }
  switch (command) {
    case Command::build_vocab:
      require_file(train_path, "training");
      require_output(vocab_path, "vocabulary output");
      require_output(labels_path, "label vocabulary output");
      break;
    case Command::train:
      require_file(train_path, "training");
      require_file(valid_path, "validation");
      require_output(checkpoint_path, "checkpoint output");
      if (vocab_path.empty() != labels_path.empty()) {
        throw ConfigError("--vocab and --labels must be given together");
      }
      break;
    case Command::evaluate:
      require_file(checkpoint_path, "checkpoint");
      require_file(test_path, "test");
      break;
    case Command::predict:
      require_file(checkpoint_path, "checkpoint");
      require_file(input_path, "input");
      require_output(output_path, "prediction output");
      break;
    case Command::ablate:
      require_file(train_path, "training");
      require_file(valid_path, "validation");
      require_file(test_path, "test");
      for (const auto& v : variants) {
        if (v != "base" && v != "no_mask" && v != "shuffle" && v != "ge_off" && v != "ge_gate" &&
            v.rfind("lambda=", 0) != 0) {
          throw ConfigError("unknown ablation variant '" + v +
                            "' (expected no_mask, shuffle, ge_off, ge_gate or lambda=<x>)");
        }
        if (v.rfind("lambda=", 0) == 0) {
          const double l = to_double("variants", v.substr(7));
          if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("variant lambda must lie in [0, 1]");
        }
      }
      break;
  }
}

}  // namespace sgm
