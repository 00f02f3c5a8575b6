#include "ctxnmt/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <sstream>

#include "ctxnmt/error.hpp"
#include "ctxnmt/text.hpp"

namespace ctxnmt {

namespace {

constexpr const char* kMagic = "CTXNMT-CHECKPOINT";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_float_le(std::string& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
}

float get_float_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int k = 0; k < 4; ++k) bits |= std::uint32_t{p[k]} << (8 * k);
  return std::bit_cast<float>(bits);
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string origin) : bytes_(bytes), origin_(std::move(origin)) {}

  std::string line() {
    const auto nl = bytes_.find('\n', pos_);
    if (nl == std::string::npos) fail("unexpected end of file");
    std::string out = bytes_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    ++line_;
    return out;
  }

  const unsigned char* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) fail("truncated tensor payload");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
    pos_ += n;
    return p;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw MalformedDataError(origin_, line_ + 1, what);
  }

  std::size_t number(const std::string& text) const {
    std::size_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
      fail("expected an integer, got '" + text + "'");
    }
    return v;
  }

 private:
  const std::string& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

}  // namespace

ModelDims dims_for(const HyperParams& hp, const Vocabulary& source, const Vocabulary& target) {
  return {static_cast<Index>(source.size()), static_cast<Index>(target.size()),
          static_cast<Index>(hp.embed_dim), static_cast<Index>(hp.hidden_dim),
          static_cast<Index>(hp.attention_dim)};
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out;
  out += std::string(kMagic) + " " + std::to_string(kCheckpointFormatVersion) + "\n";
  out += "step " + std::to_string(ckpt.step) + "\n";
  const auto& h = ckpt.hyper;
  out += "hyper embed_dim=" + std::to_string(h.embed_dim) + " hidden_dim=" +
         std::to_string(h.hidden_dim) + " attention_dim=" + std::to_string(h.attention_dim) +
         " max_source_len=" + std::to_string(h.max_source_len) +
         " max_target_len=" + std::to_string(h.max_target_len) +
         " learning_rate=" + format_double(h.learning_rate) +
         " batch_size=" + std::to_string(h.batch_size) + " epochs=" + std::to_string(h.epochs) +
         " rng_seed=" + std::to_string(h.rng_seed) + "\n";
  for (const auto* side : {"source", "target"}) {
    const auto& v = std::string(side) == "source" ? ckpt.source_vocab : ckpt.target_vocab;
    out += std::string(side) + "_vocab " + std::to_string(v.size()) + "\n";
    for (const auto& t : v.tokens()) out += t + "\n";
  }
  out += "tensors " + std::to_string(ModelParams<float>::kNumTensors) + "\n";
  ckpt.params.for_each([&](const std::string& name, const Matrix<float>& m) {
    out += "tensor " + name + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    for (Index i = 0; i < m.size(); ++i) put_float_le(out, m.data()[i]);
    out += "\n";
  });
  out += "end\n";
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& origin) {
  Reader in(bytes, origin);
  const auto magic = split_tokens(in.line());
  if (magic.size() != 2 || magic[0] != kMagic) in.fail("not a checkpoint file");
  if (in.number(magic[1]) != static_cast<std::size_t>(kCheckpointFormatVersion)) {
    in.fail("unsupported checkpoint version " + magic[1]);
  }
  Checkpoint ckpt;
  const auto step = split_tokens(in.line());
  if (step.size() != 2 || step[0] != "step") in.fail("expected step line");
  ckpt.step = in.number(step[1]);

  const auto hyper = split_tokens(in.line());
  if (hyper.empty() || hyper[0] != "hyper") in.fail("expected hyper line");
  std::map<std::string, std::string> fields;
  for (std::size_t i = 1; i < hyper.size(); ++i) {
    const auto eq = hyper[i].find('=');
    if (eq == std::string::npos) in.fail("bad hyperparameter field '" + hyper[i] + "'");
    fields[hyper[i].substr(0, eq)] = hyper[i].substr(eq + 1);
  }
  const auto need = [&](const char* key) {
    const auto it = fields.find(key);
    if (it == fields.end()) in.fail(std::string("missing hyperparameter ") + key);
    return it->second;
  };
  auto& h = ckpt.hyper;
  h.embed_dim = in.number(need("embed_dim"));
  h.hidden_dim = in.number(need("hidden_dim"));
  h.attention_dim = in.number(need("attention_dim"));
  h.max_source_len = in.number(need("max_source_len"));
  h.max_target_len = in.number(need("max_target_len"));
  h.learning_rate = std::stod(need("learning_rate"));
  h.batch_size = in.number(need("batch_size"));
  h.epochs = in.number(need("epochs"));
  h.rng_seed = std::stoull(need("rng_seed"));

  for (const auto* side : {"source", "target"}) {
    const auto header = split_tokens(in.line());
    if (header.size() != 2 || header[0] != std::string(side) + "_vocab") {
      in.fail(std::string("expected ") + side + "_vocab line");
    }
    std::vector<std::string> tokens(in.number(header[1]));
    for (auto& t : tokens) t = in.line();
    (std::string(side) == "source" ? ckpt.source_vocab : ckpt.target_vocab) =
        Vocabulary::from_tokens(tokens);
  }

  const auto dims = dims_for(h, ckpt.source_vocab, ckpt.target_vocab);
  ckpt.params = ModelParams<float>::zeros(dims);
  const auto count = split_tokens(in.line());
  if (count.size() != 2 || count[0] != "tensors" ||
      in.number(count[1]) != ModelParams<float>::kNumTensors) {
    in.fail("expected tensors line with " + std::to_string(ModelParams<float>::kNumTensors) + " entries");
  }
  std::map<std::string, bool> seen;
  for (std::size_t k = 0; k < ModelParams<float>::kNumTensors; ++k) {
    const auto header = split_tokens(in.line());
    if (header.size() != 4 || header[0] != "tensor") in.fail("expected tensor header");
    const std::string& name = header[1];
    const auto rows = static_cast<Index>(in.number(header[2]));
    const auto cols = static_cast<Index>(in.number(header[3]));
    Matrix<float>* target = nullptr;
    ckpt.params.for_each([&](const std::string& n, Matrix<float>& m) {
      if (n == name) target = &m;
    });
    if (!target) in.fail("unknown tensor '" + name + "'");
    if (seen[name]) in.fail("duplicate tensor '" + name + "'");
    seen[name] = true;
    if (rows != target->rows() || cols != target->cols()) {
      in.fail("tensor '" + name + "' has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
              ", header implies " + std::to_string(target->rows()) + "x" +
              std::to_string(target->cols()));
    }
    const auto* p = in.take(static_cast<std::size_t>(rows * cols) * 4);
    for (Index i = 0; i < rows * cols; ++i) target->data()[i] = get_float_le(p + 4 * i);
    if (!in.line().empty()) in.fail("missing newline after tensor payload");
  }
  if (in.line() != "end" || !in.at_end()) in.fail("expected end marker");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path), path.string());
}

}  // namespace ctxnmt
