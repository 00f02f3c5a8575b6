#include "ctxnmt/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "ctxnmt/error.hpp"
#include "ctxnmt/text.hpp"

namespace ctxnmt {

namespace pt = boost::property_tree;

std::string to_string(MajorityBasis basis) { return basis == MajorityBasis::Peak ? "peak" : "mass"; }

MajorityBasis parse_majority_basis(const std::string& text) {
  if (text == "peak") return MajorityBasis::Peak;
  if (text == "mass") return MajorityBasis::Mass;
  throw ConfigError("majority_basis must be 'peak' or 'mass', got '" + text + "'");
}

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  hyper.rng_seed = s;
}

void RunConfig::validate() const {
  context.validate();
  hyper.validate();
  beam.validate();
  if (ensemble == 0) throw ConfigError("model.ensemble must be at least 1");
  if (systems.empty()) throw ConfigError("run.systems must name at least one system");
  for (const auto& s : systems) (void)ContextConfig::from_mode(s);
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("run.test_fraction must lie in (0, 1)");
  if (threads == 0) throw ConfigError("run.threads must be at least 1");
  if (!paths.source.empty() && (paths.target.empty() || paths.docs.empty())) {
    throw ConfigError("paths.source requires paths.target and paths.docs");
  }
  if (!paths.test_source.empty() && (paths.test_target.empty() || paths.test_docs.empty())) {
    throw ConfigError("paths.test_source requires paths.test_target and paths.test_docs");
  }
}

void RunConfig::validate_inputs() const {
  if (paths.source.empty() && synth.docs == 0) {
    throw ConfigError("either paths.source or synth.docs must be set");
  }
  for (const auto* p : {&paths.source, &paths.target, &paths.docs, &paths.test_source, &paths.test_target,
                        &paths.test_docs}) {
    if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError("input file not found: " + p->string());
  }
}

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

struct Schema {
  std::map<std::string, std::set<std::string>> keys{
      {"paths", {"source", "target", "docs", "test_source", "test_target", "test_docs", "out"}},
      {"context", {"mode", "source_window", "target_window", "marking", "prefix", "break_token"}},
      {"bpe", {"enabled", "num_merges", "joint", "vocab_threshold"}},
      {"model",
       {"embed_dim", "hidden_dim", "attention_dim", "max_source_len", "max_target_len", "learning_rate",
        "batch_size", "epochs", "vocab_cap", "savepoint_every", "ensemble"}},
      {"decode", {"beam_size", "max_len_factor", "max_len_constant", "length_alpha", "coverage_beta"}},
      {"analysis", {"min_freq", "min_cases", "majority_basis", "pronoun"}},
      {"synth", {"docs", "units_per_doc"}},
      {"run", {"seed", "systems", "test_fraction", "threads"}},
  };
};

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string origin) : tree_(tree), origin_(std::move(origin)) {}

  const std::string* raw(const std::string& section, const std::string& key) const {
    auto s = tree_.find(section);
    if (s == tree_.not_found()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.not_found()) return nullptr;
    return &k->second.data();
  }

  void string(const std::string& section, const std::string& key, std::string& out) const {
    if (auto* v = raw(section, key)) out = *v;
  }
  void path(const std::string& section, const std::string& key, std::filesystem::path& out) const {
    if (auto* v = raw(section, key)) out = *v;
  }
  template <typename UInt>
  void size(const std::string& section, const std::string& key, UInt& out) const {
    if (auto* v = raw(section, key)) {
      try {
        std::size_t used = 0;
        if (!v->empty() && (*v)[0] == '-') throw std::invalid_argument("negative");
        const auto parsed = std::stoull(*v, &used);
        if (used != v->size()) throw std::invalid_argument("trailing characters");
        out = static_cast<UInt>(parsed);
      } catch (const std::exception&) {
        fail(section, key, "expected a non-negative integer, got '" + *v + "'");
      }
    }
  }
  void real(const std::string& section, const std::string& key, double& out) const {
    if (auto* v = raw(section, key)) {
      try {
        std::size_t used = 0;
        out = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        fail(section, key, "expected a number, got '" + *v + "'");
      }
    }
  }
  void boolean(const std::string& section, const std::string& key, bool& out) const {
    if (auto* v = raw(section, key)) {
      if (*v == "true" || *v == "1") out = true;
      else if (*v == "false" || *v == "0") out = false;
      else fail(section, key, "expected true or false, got '" + *v + "'");
    }
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
    throw ConfigError(origin_ + ": " + section + "." + key + ": " + what);
  }

 private:
  const pt::ptree& tree_;
  std::string origin_;
};

}  // namespace

std::string serialize_config(const RunConfig& c) {
  std::ostringstream o;
  o << "[paths]\n"
    << "source=" << c.paths.source.string() << "\n"
    << "target=" << c.paths.target.string() << "\n"
    << "docs=" << c.paths.docs.string() << "\n"
    << "test_source=" << c.paths.test_source.string() << "\n"
    << "test_target=" << c.paths.test_target.string() << "\n"
    << "test_docs=" << c.paths.test_docs.string() << "\n"
    << "out=" << c.paths.out.string() << "\n\n";
  o << "[context]\n"
    << "source_window=" << c.context.source_window << "\n"
    << "target_window=" << c.context.target_window << "\n"
    << "marking=" << to_string(c.context.marking) << "\n"
    << "prefix=" << c.context.context_prefix << "\n"
    << "break_token=" << c.context.break_token << "\n\n";
  o << "[bpe]\n"
    << "enabled=" << (c.bpe_enabled ? "true" : "false") << "\n"
    << "num_merges=" << c.bpe.num_merges << "\n"
    << "joint=" << (c.bpe.joint ? "true" : "false") << "\n"
    << "vocab_threshold=" << c.bpe.vocab_threshold << "\n\n";
  const auto& h = c.hyper;
  o << "[model]\n"
    << "embed_dim=" << h.embed_dim << "\n"
    << "hidden_dim=" << h.hidden_dim << "\n"
    << "attention_dim=" << h.attention_dim << "\n"
    << "max_source_len=" << h.max_source_len << "\n"
    << "max_target_len=" << h.max_target_len << "\n"
    << "learning_rate=" << g17(h.learning_rate) << "\n"
    << "batch_size=" << h.batch_size << "\n"
    << "epochs=" << h.epochs << "\n"
    << "vocab_cap=" << c.vocab_cap << "\n"
    << "savepoint_every=" << c.savepoint_every << "\n"
    << "ensemble=" << c.ensemble << "\n\n";
  o << "[decode]\n"
    << "beam_size=" << c.beam.beam_size << "\n"
    << "max_len_factor=" << g17(c.beam.max_len_factor) << "\n"
    << "max_len_constant=" << c.beam.max_len_constant << "\n"
    << "length_alpha=" << g17(c.beam.length_alpha) << "\n"
    << "coverage_beta=" << g17(c.beam.coverage_beta) << "\n\n";
  o << "[analysis]\n"
    << "min_freq=" << c.analysis.min_freq << "\n"
    << "min_cases=" << c.analysis.min_cases << "\n"
    << "majority_basis=" << to_string(c.analysis.majority_basis) << "\n"
    << "pronoun=" << c.analysis.pronoun << "\n\n";
  o << "[synth]\n"
    << "docs=" << c.synth.docs << "\n"
    << "units_per_doc=" << c.synth.units_per_doc << "\n\n";
  o << "[run]\n"
    << "seed=" << c.seed << "\n"
    << "systems=" << join_list(c.systems) << "\n"
    << "test_fraction=" << g17(c.test_fraction) << "\n"
    << "threads=" << c.threads << "\n";
  return o.str();
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  const Schema schema;
  for (const auto& [section, body] : tree) {
    auto s = schema.keys.find(section);
    if (s == schema.keys.end()) throw ConfigError(origin + ": unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      if (!s->second.count(key)) throw ConfigError(origin + ": unknown key " + section + "." + key);
    }
  }

  RunConfig c;
  const Reader r(tree, origin);
  r.path("paths", "source", c.paths.source);
  r.path("paths", "target", c.paths.target);
  r.path("paths", "docs", c.paths.docs);
  r.path("paths", "test_source", c.paths.test_source);
  r.path("paths", "test_target", c.paths.test_target);
  r.path("paths", "test_docs", c.paths.test_docs);
  r.path("paths", "out", c.paths.out);

  if (auto* mode = r.raw("context", "mode")) {
    try {
      c.context = ContextConfig::from_mode(*mode);
    } catch (const ConfigError& e) {
      r.fail("context", "mode", e.what());
    }
  }
  r.size("context", "source_window", c.context.source_window);
  r.size("context", "target_window", c.context.target_window);
  if (auto* m = r.raw("context", "marking")) {
    try {
      c.context.marking = parse_marking(*m);
    } catch (const ConfigError& e) {
      r.fail("context", "marking", e.what());
    }
  }
  r.string("context", "prefix", c.context.context_prefix);
  r.string("context", "break_token", c.context.break_token);

  r.boolean("bpe", "enabled", c.bpe_enabled);
  r.size("bpe", "num_merges", c.bpe.num_merges);
  r.boolean("bpe", "joint", c.bpe.joint);
  r.size("bpe", "vocab_threshold", c.bpe.vocab_threshold);

  auto& h = c.hyper;
  r.size("model", "embed_dim", h.embed_dim);
  r.size("model", "hidden_dim", h.hidden_dim);
  r.size("model", "attention_dim", h.attention_dim);
  r.size("model", "max_source_len", h.max_source_len);
  r.size("model", "max_target_len", h.max_target_len);
  r.real("model", "learning_rate", h.learning_rate);
  r.size("model", "batch_size", h.batch_size);
  r.size("model", "epochs", h.epochs);
  r.size("model", "vocab_cap", c.vocab_cap);
  r.size("model", "savepoint_every", c.savepoint_every);
  r.size("model", "ensemble", c.ensemble);

  r.size("decode", "beam_size", c.beam.beam_size);
  r.real("decode", "max_len_factor", c.beam.max_len_factor);
  r.size("decode", "max_len_constant", c.beam.max_len_constant);
  r.real("decode", "length_alpha", c.beam.length_alpha);
  r.real("decode", "coverage_beta", c.beam.coverage_beta);

  r.size("analysis", "min_freq", c.analysis.min_freq);
  r.size("analysis", "min_cases", c.analysis.min_cases);
  if (auto* b = r.raw("analysis", "majority_basis")) {
    try {
      c.analysis.majority_basis = parse_majority_basis(*b);
    } catch (const ConfigError& e) {
      r.fail("analysis", "majority_basis", e.what());
    }
  }
  r.string("analysis", "pronoun", c.analysis.pronoun);

  r.size("synth", "docs", c.synth.docs);
  r.size("synth", "units_per_doc", c.synth.units_per_doc);

  std::uint64_t seed = c.seed;
  r.size("run", "seed", seed);
  c.apply_seed(seed);
  if (auto* s = r.raw("run", "systems")) {
    c.systems.clear();
    std::string item;
    std::istringstream list(*s);
    while (std::getline(list, item, ',')) {
      if (!item.empty()) c.systems.push_back(item);
    }
  }
  r.real("run", "test_fraction", c.test_fraction);
  r.size("run", "threads", c.threads);

  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse_config(read_file(path), path.string());
}

}  // namespace ctxnmt
