#include "sgm/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "sgm/errors.hpp"

namespace sgm {

namespace {

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
  out += "tensor " + name + " " + std::to_string(t.rank());
  for (std::size_t d : t.shape()) out += " " + std::to_string(d);
  out += '\n';
  for (double v : t.values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
  out += '\n';
}

void put_section(std::string& out, const std::string& name, const std::string& body) {
  out += "section " + name + " " + std::to_string(body.size()) + "\n";
  out += body;
  out += '\n';
}

std::string record_text(const SelectionRecord& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", r.best_valid_f1);
  return "selected_epoch=" + std::to_string(r.selected_epoch) + "\nbest_valid_f1=" + buf +
         "\nmax_steps=" + std::to_string(r.max_steps) + "\n";
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool done() const { return pos_ >= bytes_.size(); }

  std::string line() {
    const auto end = bytes_.find('\n', pos_);
    if (end == std::string::npos) throw DataError("checkpoint truncated");
    std::string l = bytes_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return l;
  }

  std::string take(std::size_t n) {
    if (pos_ + n + 1 > bytes_.size() || bytes_[pos_ + n] != '\n') {
      throw DataError("checkpoint truncated or corrupt");
    }
    std::string s = bytes_.substr(pos_, n);
    pos_ += n + 1;
    return s;
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

Tensor read_tensor_body(Reader& in, std::istringstream& header, const std::string& name) {
  std::size_t rank = 0;
  if (!(header >> rank) || rank == 0) throw DataError("bad tensor header for '" + name + "'");
  Shape shape(rank);
  for (auto& d : shape) {
    if (!(header >> d) || d == 0) throw DataError("bad tensor shape for '" + name + "'");
  }
  const std::size_t n = shape_volume(shape);
  const std::string raw = in.take(n * 8);
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i * 8 + b])) << (8 * b);
    }
    values[i] = std::bit_cast<double>(bits);
  }
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace

std::string serialize_checkpoint(const RunConfig& config, const Vocabulary& vocab,
                                 const LabelVocabulary& labels, const SgmModel& model,
                                 const SelectionRecord& record, bool include_optimizer) {
  std::string out = std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion) + "\n";
  put_section(out, "config", config.to_kv());
  put_section(out, "vocab", vocab.serialize());
  put_section(out, "labels", labels.serialize());
  put_section(out, "record", record_text(record));
  const ParameterStore& params = model.params();
  for (const Parameter& p : params) put_tensor(out, p.name, p.value);
  if (include_optimizer) {
    out += "adam " + std::to_string(params.step()) + "\n";
    for (const Parameter& p : params) put_tensor(out, "adam.m/" + p.name, p.first_moment);
    for (const Parameter& p : params) put_tensor(out, "adam.v/" + p.name, p.second_moment);
  }
  out += "end\n";
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  {
    std::istringstream header(in.line());
    std::string magic;
    int version = 0;
    if (!(header >> magic >> version) || magic != kCheckpointMagic) {
      throw DataError("not an SGM checkpoint");
    }
    if (version != kCheckpointVersion) {
      throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
  }
  Checkpoint ck;
  std::map<std::string, Tensor> tensors;
  bool have_config = false, have_vocab = false, have_labels = false, ended = false;
  std::optional<std::uint64_t> adam_step;
  while (!ended) {
    std::istringstream header(in.line());
    std::string kind, name;
    header >> kind;
    if (kind == "end") {
      ended = true;
    } else if (kind == "section") {
      std::size_t n = 0;
      if (!(header >> name >> n)) throw DataError("bad checkpoint section header");
      const std::string body = in.take(n);
      if (name == "config") {
        ck.config = RunConfig::from_kv(body);
        have_config = true;
      } else if (name == "vocab") {
        ck.vocab = Vocabulary::deserialize(body);
        have_vocab = true;
      } else if (name == "labels") {
        ck.labels = LabelVocabulary::deserialize(body);
        have_labels = true;
      } else if (name == "record") {
        for (const auto& [k, v] : parse_kv(body)) {
          if (k == "selected_epoch") ck.record.selected_epoch = std::stoull(v);
          else if (k == "best_valid_f1") ck.record.best_valid_f1 = std::stod(v);
          else if (k == "max_steps") ck.record.max_steps = std::stoull(v);
        }
      } else {
        throw DataError("unknown checkpoint section '" + name + "'");
      }
    } else if (kind == "tensor") {
      if (!(header >> name)) throw DataError("bad tensor header");
      Tensor t = read_tensor_body(in, header, name);
      if (!tensors.emplace(name, std::move(t)).second) {
        throw DataError("duplicate tensor '" + name + "' in checkpoint");
      }
    } else if (kind == "adam") {
      std::uint64_t step = 0;
      if (!(header >> step)) throw DataError("bad optimizer header");
      adam_step = step;
    } else {
      throw DataError("unexpected checkpoint record '" + kind + "'");
    }
  }
  if (!have_config || !have_vocab || !have_labels) throw DataError("checkpoint is missing a section");

  ck.model = std::make_unique<SgmModel>(ck.config.effective_model(), ck.vocab.size(),
                                        ck.labels.label_count(), 0);
  ParameterStore& params = ck.model->params();
  for (Parameter& p : params) {
    auto load = [&](const std::string& key, Tensor& dst) {
      auto it = tensors.find(key);
      if (it == tensors.end()) throw DataError("checkpoint lacks tensor '" + key + "'");
      if (it->second.shape() != dst.shape()) {
        throw DataError("tensor '" + key + "' has shape " + shape_string(it->second.shape()) +
                        ", model expects " + shape_string(dst.shape()));
      }
      dst = std::move(it->second);
      tensors.erase(it);
    };
    load(p.name, p.value);
    if (adam_step) {
      load("adam.m/" + p.name, p.first_moment);
      load("adam.v/" + p.name, p.second_moment);
    }
  }
  if (!tensors.empty()) throw DataError("checkpoint has unexpected tensor '" + tensors.begin()->first + "'");
  if (adam_step) params.set_step(*adam_step);
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config,
                     const Vocabulary& vocab, const LabelVocabulary& labels, const SgmModel& model,
                     const SelectionRecord& record, bool include_optimizer) {
  const std::string bytes = serialize_checkpoint(config, vocab, labels, model, record, include_optimizer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace sgm
