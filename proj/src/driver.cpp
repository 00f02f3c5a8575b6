#include "ctxnmt/driver.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <ctime>
#include <json.hpp>
#include <map>
#include <sstream>

#include "ctxnmt/attnstats.hpp"
#include "ctxnmt/error.hpp"
#include "ctxnmt/text.hpp"
#include "ctxnmt/train.hpp"

namespace ctxnmt {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string version_string() {
  return std::string("ctxnmt ") + kToolkitVersion + " (checkpoint format " + std::to_string(kCheckpointFormatVersion) +
         ", bpe format " + std::to_string(kBpeFormatVersion) + ")";
}

// Options of every subcommand, bound before parsing.
struct Options {
  // global
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
  bool version = false;

  // shared data options
  std::string mode;
  std::string source, target, docs;
  std::string stem;
  std::string output;

  // prepare / bpe
  std::string bpe_source, bpe_target;
  std::optional<std::size_t> threshold;
  std::optional<std::size_t> merges;
  std::vector<std::string> inputs;
  std::string model;
  std::string input;
  bool joint = false;

  // synth
  std::optional<std::size_t> synth_docs;
  std::optional<std::size_t> units_per_doc;

  // train
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> savepoint_every;

  // translate
  std::vector<std::string> checkpoints;
  std::string checkpoint_dir;
  std::optional<std::size_t> ensemble;
  std::string raw_output;
  std::string attention;
  std::string segment = "auto";
  std::optional<std::size_t> beam;
  std::optional<double> alpha;
  std::optional<double> beta;

  // score
  std::string hyp, ref;
  std::string regime = "sentence";
  std::size_t window = 2;
  std::string name = "system";

  // attn-stats / heatmap
  std::string kind;
  std::optional<std::size_t> min_freq;
  std::optional<std::size_t> min_cases;
  std::string basis;
  std::size_t id = 0;
  bool pgm = false;

  // pronoun-eval
  std::vector<std::string> systems;

  // replay
  std::string manifest;
};

class Session {
 public:
  Session(std::string command, std::vector<std::string> argv, RunConfig config, std::ostream& out, std::ostream& err)
      : command_(std::move(command)),
        argv_(std::move(argv)),
        config_(std::move(config)),
        out_(out),
        err_(err),
        started_(utc_now()) {}

  RunConfig& config() { return config_; }
  std::ostream& out() { return out_; }
  std::ostream& log() { return err_; }
  fs::path out_dir() const { return config_.paths.out; }

  void input(const fs::path& p) {
    if (!fs::exists(p)) throw ConfigError("input file not found: " + p.string());
    inputs_.push_back(p);
  }
  void output(const fs::path& p) { outputs_.push_back(p); }
  void checkpoint(const fs::path& p) { checkpoints_.push_back(p); }

  void write_manifest() const {
    json m;
    m["tool"] = "ctxnmt";
    m["version"] = kToolkitVersion;
    m["checkpoint_format"] = kCheckpointFormatVersion;
    m["bpe_format"] = kBpeFormatVersion;
    m["command"] = command_;
    m["argv"] = argv_;
    m["config"] = serialize_config(config_);
    json inputs = json::object();
    for (const auto& p : inputs_) inputs[p.string()] = file_checksum(p);
    m["inputs"] = inputs;
    json outputs = json::object();
    for (const auto& p : outputs_) {
      if (fs::exists(p)) outputs[p.string()] = file_checksum(p);
    }
    m["outputs"] = outputs;
    json ckpts = json::array();
    for (const auto& p : checkpoints_) ckpts.push_back(p.string());
    m["checkpoints"] = ckpts;
    m["started"] = started_;
    m["finished"] = utc_now();
    write_file_atomic(out_dir() / (command_ + ".manifest.json"), m.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  RunConfig config_;
  std::ostream& out_;
  std::ostream& err_;
  std::string started_;
  std::vector<fs::path> inputs_, outputs_, checkpoints_;
};

ContextConfig context_for(const Session& s, const RunConfig& c, const std::string& mode) {
  (void)s;
  if (mode.empty()) return c.context;
  auto ctx = ContextConfig::from_mode(mode);
  ctx.context_prefix = c.context.context_prefix;
  ctx.break_token = c.context.break_token;
  return ctx;
}

std::string or_default(const std::string& value, const fs::path& fallback) {
  return value.empty() ? fallback.string() : value;
}

std::vector<Tokens> read_token_lines(const fs::path& path) {
  std::vector<Tokens> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    auto toks = line.empty() ? Tokens{} : split_tokens(line);
    if (!valid_tokens(toks)) throw MalformedDataError(path.string(), lineno, "empty token (double or edge space)");
    out.push_back(std::move(toks));
  }
  return out;
}

void write_token_lines(const fs::path& path, const std::vector<Tokens>& rows) {
  std::string s;
  for (const auto& r : rows) s += join_tokens(r) + '\n';
  write_file_atomic(path, s);
}

// --- subcommands -------------------------------------------------------------

void cmd_prepare(Session& s, const Options& o) {
  auto& c = s.config();
  const fs::path src = or_default(o.source, c.paths.source);
  const fs::path trg = or_default(o.target, c.paths.target);
  const fs::path docs = or_default(o.docs, c.paths.docs);
  if (src.empty() || trg.empty() || docs.empty()) throw ConfigError("prepare needs --source, --target and --docs");
  s.input(src);
  s.input(trg);
  s.input(docs);
  auto units = read_corpus(src, trg, docs);
  if (!o.bpe_source.empty() || !o.bpe_target.empty()) {
    if (o.bpe_source.empty() || o.bpe_target.empty()) throw ConfigError("prepare needs both --bpe-source and --bpe-target");
    s.input(o.bpe_source);
    s.input(o.bpe_target);
    const SubwordModels models{load_bpe(o.bpe_source), load_bpe(o.bpe_target)};
    units = segment_units(units, models, o.threshold.value_or(c.bpe.vocab_threshold));
  }
  const auto ctx = context_for(s, c, o.mode);
  ctx.validate();
  c.context = ctx;
  const auto examples = extend_corpus(units, ctx);
  const fs::path stem = or_default(o.stem, s.out_dir() / "prepared");
  write_extended(stem, examples);
  for (const char* ext : {".src", ".trg", ".docs", ".geom"}) s.output(with_suffix(stem, ext));
  s.log() << "prepare: " << examples.size() << " examples written to " << stem.string() << "\n";
}

void cmd_synth(Session& s, const Options& o) {
  auto& c = s.config();
  if (o.synth_docs) c.synth.docs = *o.synth_docs;
  if (o.units_per_doc) c.synth.units_per_doc = *o.units_per_doc;
  if (c.synth.docs == 0 && !o.synth_docs) c.synth.docs = 100;
  const auto units = generate_synthetic_corpus(SynthSpec::standard(c.synth.docs, c.synth.units_per_doc, c.seed));
  const fs::path stem = or_default(o.stem, s.out_dir() / "synth");
  write_corpus(stem, units);
  for (const char* ext : {".src", ".trg", ".docs"}) s.output(with_suffix(stem, ext));
  s.log() << "synth: " << units.size() << " units written to " << stem.string() << "\n";
}

void cmd_bpe_learn(Session& s, const Options& o) {
  auto& c = s.config();
  if (o.merges) c.bpe.num_merges = *o.merges;
  if (o.joint) c.bpe.joint = true;
  if (o.inputs.empty()) throw ConfigError("bpe-learn needs at least one --input file");
  BpeModel conventions;
  conventions.reserved_tokens = {c.context.break_token};
  conventions.reserved_prefix = c.context.context_prefix;
  std::vector<std::string> lines;
  for (const auto& in : o.inputs) {
    s.input(in);
    const auto l = read_lines(in);
    lines.insert(lines.end(), l.begin(), l.end());
  }
  const auto model = learn_bpe(count_words(lines, conventions), c.bpe.num_merges, conventions);
  const fs::path out = or_default(o.output, s.out_dir() / "bpe.model");
  save_bpe(out, model);
  s.output(out);
  s.log() << "bpe-learn: " << model.merges.size() << " merges written to " << out.string() << "\n";
}

void cmd_bpe_apply(Session& s, const Options& o) {
  auto& c = s.config();
  if (o.model.empty() || o.input.empty() || o.output.empty()) {
    throw ConfigError("bpe-apply needs --model, --input and --output");
  }
  s.input(o.model);
  s.input(o.input);
  if (o.threshold) c.bpe.vocab_threshold = *o.threshold;
  const BpeSegmenter seg(load_bpe(o.model));
  std::vector<Tokens> rows;
  for (const auto& r : read_token_lines(o.input)) rows.push_back(seg.apply(r, c.bpe.vocab_threshold));
  write_token_lines(o.output, rows);
  s.output(o.output);
}

std::vector<fs::path> list_checkpoints(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) throw ConfigError("checkpoint directory not found: " + dir.string());
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".bin") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void cmd_train(Session& s, const Options& o) {
  auto& c = s.config();
  if (o.epochs) c.hyper.epochs = *o.epochs;
  if (o.savepoint_every) c.savepoint_every = *o.savepoint_every;
  c.hyper.validate();
  const fs::path stem = or_default(o.stem, s.out_dir() / "prepared");
  for (const char* ext : {".src", ".trg", ".docs", ".geom"}) s.input(with_suffix(stem, ext));
  const auto examples = read_extended(stem);
  if (examples.empty()) throw MalformedDataError(with_suffix(stem, ".src").string(), 0, "empty training corpus");
  const auto data = make_training_set(examples, c.hyper, c.vocab_cap);
  if (data.pairs.empty()) throw ConfigError("no training example fits the configured maximum lengths");
  s.log() << "train: " << data.pairs.size() << " examples (" << data.skipped << " skipped)\n";
  const auto result = train(data, c.hyper, SavepointSchedule{c.savepoint_every});
  const fs::path dir = or_default(o.output, s.out_dir() / "checkpoints");
  for (const auto& ck : result.checkpoints) {
    char file[64];
    std::snprintf(file, sizeof file, "ckpt-%08zu.bin", ck.step);
    save_checkpoint(dir / file, ck);
    s.output(dir / file);
    s.checkpoint(dir / file);
  }
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    s.log() << "epoch " << e + 1 << " loss " << result.epoch_losses[e] << "\n";
  }
  if (result.failure) throw NumericError(*result.failure + " (last good checkpoint kept)");
}

void cmd_translate(Session& s, const Options& o) {
  auto& c = s.config();
  if (o.beam) c.beam.beam_size = *o.beam;
  if (o.alpha) c.beam.length_alpha = *o.alpha;
  if (o.beta) c.beam.coverage_beta = *o.beta;
  if (o.ensemble) c.ensemble = *o.ensemble;
  c.beam.validate();
  std::vector<fs::path> paths(o.checkpoints.begin(), o.checkpoints.end());
  if (paths.empty()) {
    auto all = list_checkpoints(or_default(o.checkpoint_dir, s.out_dir() / "checkpoints"));
    const std::size_t k = std::min(c.ensemble, all.size());
    paths.assign(all.end() - static_cast<std::ptrdiff_t>(k), all.end());
  }
  if (paths.empty()) throw ConfigError("translate: no checkpoints found");
  std::vector<Checkpoint> ensemble;
  for (const auto& p : paths) {
    s.input(p);
    ensemble.push_back(load_checkpoint(p));
  }
  const fs::path stem = or_default(o.stem, s.out_dir() / "prepared");
  for (const char* ext : {".src", ".trg", ".docs", ".geom"}) s.input(with_suffix(stem, ext));
  const auto examples = read_extended(stem);
  const auto translations = translate_examples(ensemble, examples, c.beam, c.threads);

  bool two_segments = std::any_of(examples.begin(), examples.end(),
                                  [](const ExtendedExample& e) { return !e.target_breaks.empty(); });
  SegmentMode mode = two_segments ? SegmentMode::Last : SegmentMode::All;
  if (o.segment == "last") mode = SegmentMode::Last;
  else if (o.segment == "all") mode = SegmentMode::All;
  else if (o.segment != "auto") throw ConfigError("--segment must be auto, last or all");

  const std::string join = "@@";
  std::vector<Tokens> raw, words;
  std::size_t truncated = 0;
  for (const auto& t : translations) {
    raw.push_back(t.tokens);
    words.push_back(detokenize(t.tokens, mode, c.context.break_token, join));
    if (!t.finished) ++truncated;
  }
  const fs::path out = or_default(o.output, s.out_dir() / "translation.hyp");
  write_token_lines(out, words);
  s.output(out);
  if (!o.raw_output.empty()) {
    write_token_lines(o.raw_output, raw);
    s.output(o.raw_output);
  }
  if (!o.attention.empty()) {
    write_attention(o.attention, export_records(translations, examples, c.context.break_token));
    s.output(o.attention);
  }
  s.log() << "translate: " << translations.size() << " units, " << truncated << " truncated at maximum length\n";
}

void cmd_score(Session& s, const Options& o) {
  if (o.hyp.empty() || o.ref.empty()) throw ConfigError("score needs --hyp and --ref");
  s.input(o.hyp);
  s.input(o.ref);
  const auto hyp = read_token_lines(o.hyp);
  const auto ref = read_token_lines(o.ref);
  SystemScores row{o.name, {}, {}};
  if (o.regime == "sentence") {
    row.bleu = bleu(hyp, ref);
    row.chrf = chrf(hyp, ref);
  } else if (o.regime == "extended") {
    if (o.docs.empty()) throw ConfigError("score --regime extended needs --docs");
    s.input(o.docs);
    const auto ext = score_extended(hyp, ref, read_lines(o.docs), o.window, s.config().context.break_token);
    row.bleu = ext.bleu;
    row.chrf = ext.chrf;
  } else {
    throw ConfigError("--regime must be sentence or extended");
  }
  const auto table = format_score_table({row});
  if (o.output.empty()) {
    s.out() << table;
  } else {
    write_file_atomic(o.output, table);
    s.output(o.output);
  }
}

void cmd_attn_stats(Session& s, const Options& o) {
  auto& c = s.config();
  if (o.min_freq) c.analysis.min_freq = *o.min_freq;
  if (o.min_cases) c.analysis.min_cases = *o.min_cases;
  if (!o.basis.empty()) c.analysis.majority_basis = parse_majority_basis(o.basis);
  if (o.attention.empty()) throw ConfigError("attn-stats needs --attention");
  if (o.kind.empty()) throw ConfigError("attn-stats needs --kind 2+1 or 2+2");
  const auto kind = parse_model_kind(o.kind);
  s.input(o.attention);
  const auto parts = partition_all(read_attention(o.attention), kind);
  const fs::path dir = or_default(o.output, s.out_dir() / "attention");
  const auto mass = word_mass_stats(parts, c.analysis.min_freq);
  const auto peak = word_peak_stats(parts, c.analysis.min_freq);
  const auto majority = majority_peak_stats(parts, c.analysis.min_cases, c.analysis.majority_basis);
  const std::pair<const char*, std::string> files[] = {
      {"attn_mass.tsv", format_word_stats(mass)},
      {"attn_peak.tsv", format_word_stats(peak)},
      {"attn_majority.tsv", format_majority_stats(majority)},
  };
  for (const auto& [name, body] : files) {
    write_file_atomic(dir / name, body);
    s.output(dir / name);
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "corpus external proportion\t%.4f\noccurrences\t%zu\n",
                corpus_external_proportion(parts), parts.size());
  write_file_atomic(dir / "attn_summary.tsv", buf);
  s.output(dir / "attn_summary.tsv");
  s.out() << buf;
}

void cmd_pronoun_eval(Session& s, const Options& o) {
  auto& c = s.config();
  if (o.source.empty() || o.ref.empty() || o.systems.empty()) {
    throw ConfigError("pronoun-eval needs --source, --ref and at least one --system NAME=FILE");
  }
  s.input(o.source);
  s.input(o.ref);
  const auto src = read_token_lines(o.source);
  const auto ref = read_token_lines(o.ref);
  if (src.size() != ref.size()) throw MalformedDataError(o.ref, 0, "reference and source differ in line count");
  std::vector<std::string> names;
  std::vector<std::vector<Tokens>> outputs;
  for (const auto& spec : o.systems) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--system expects NAME=FILE, got '" + spec + "'");
    names.push_back(spec.substr(0, eq));
    const std::string file = spec.substr(eq + 1);
    s.input(file);
    outputs.push_back(read_token_lines(file));
    if (outputs.back().size() != src.size()) throw MalformedDataError(file, 0, "system output differs in line count");
  }
  std::vector<PronounOccurrence> occurrences;
  for (std::size_t i = 0; i < src.size(); ++i) {
    std::vector<Tokens> sys;
    for (const auto& out : outputs) sys.push_back(out[i]);
    auto occ = find_occurrences(src[i], ref[i], sys, c.analysis.pronoun);
    occurrences.insert(occurrences.end(), occ.begin(), occ.end());
  }
  evaluate_occurrences(occurrences);
  const auto table = pronoun_accuracy(occurrences, names.size());
  const fs::path dir = or_default(o.output, s.out_dir() / "pronouns");
  const auto report = format_pronoun_table(table, names);
  write_file_atomic(dir / "pronoun_accuracy.tsv", report);
  write_file_atomic(dir / "adjudication.tsv", adjudication_export(occurrences, names));
  std::string tests = "comparison\tchi2\tsignificant\n";
  for (std::size_t k = 1; k < names.size(); ++k) {
    const auto& a = table.total[0];
    const auto& b = table.total[k];
    tests += names[0] + " vs " + names[k] + '\t';
    try {
      const auto r = chi_square_2x2(a.correct, a.total - a.correct, b.correct, b.total - b.correct);
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.4f\t%s\n", r.statistic, r.significant ? "yes" : "no");
      tests += buf;
    } catch (const InputError&) {
      tests += "undefined\t-\n";
    }
  }
  write_file_atomic(dir / "pronoun_tests.tsv", tests);
  for (const char* f : {"pronoun_accuracy.tsv", "adjudication.tsv", "pronoun_tests.tsv"}) s.output(dir / f);
  s.out() << report;
}

void cmd_heatmap(Session& s, const Options& o) {
  if (o.attention.empty()) throw ConfigError("heatmap needs --attention");
  s.input(o.attention);
  const auto records = read_attention(o.attention);
  auto it = std::find_if(records.begin(), records.end(), [&](const ExportedAttention& a) { return a.id == o.id; });
  if (it == records.end()) throw ConfigError("heatmap: no record with id " + std::to_string(o.id));
  const fs::path prefix = or_default(o.output, s.out_dir() / ("heatmap-" + std::to_string(o.id)));
  fs::path tsv = prefix;
  tsv += ".tsv";
  write_file_atomic(tsv, heatmap_tsv(*it));
  s.output(tsv);
  if (o.pgm) {
    fs::path pgm = prefix;
    pgm += ".pgm";
    write_file_atomic(pgm, heatmap_pgm(it->record));
    s.output(pgm);
  }
}

void cmd_run(Session& s, const Options&) {
  const auto result = run_pipeline(s.config(), s.log());
  for (const auto& rel : result.outputs) {
    s.output(s.out_dir() / rel);
    if (rel.extension() == ".bin") s.checkpoint(s.out_dir() / rel);
  }
  for (const auto* p : {&s.config().paths.source, &s.config().paths.target, &s.config().paths.docs,
                        &s.config().paths.test_source, &s.config().paths.test_target, &s.config().paths.test_docs}) {
    if (!p->empty()) s.input(*p);
  }
  s.out() << read_file(s.out_dir() / "reports/scores.tsv");
  s.out() << read_file(s.out_dir() / "reports/pronoun_accuracy.tsv");
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth);

void cmd_replay(const Options& o, std::ostream& out, std::ostream& err, int depth) {
  if (o.manifest.empty()) throw ConfigError("replay needs --manifest");
  if (depth > 0) throw ConfigError("replay of a replay manifest is not supported");
  json m;
  try {
    m = json::parse(read_file(o.manifest));
  } catch (const json::exception& e) {
    throw MalformedDataError(o.manifest, 0, std::string("invalid manifest: ") + e.what());
  }
  if (!m.contains("argv") || !m.contains("config") || !m.contains("command")) {
    throw MalformedDataError(o.manifest, 0, "manifest lacks argv, config or command");
  }
  const json inputs = m.value("inputs", json::object());
  for (const auto& [path, crc] : inputs.items()) {
    if (!fs::exists(path)) throw ConfigError("replay: input missing: " + path);
    if (file_checksum(path) != crc.get<std::string>()) throw ConfigError("replay: input changed since the run: " + path);
  }
  const fs::path snapshot = fs::path(o.manifest).parent_path() / (m["command"].get<std::string>() + ".replay.ini");
  write_file_atomic(snapshot, m["config"].get<std::string>());
  std::vector<std::string> argv = m["argv"].get<std::vector<std::string>>();
  std::vector<std::string> replayed;
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == "--config" && i + 1 < argv.size()) {
      ++i;
      continue;
    }
    if (argv[i].rfind("--config=", 0) == 0) continue;
    replayed.push_back(argv[i]);
  }
  replayed.insert(replayed.begin(), {"--config", snapshot.string()});
  const int code = dispatch(replayed, out, err, depth + 1);
  if (code != kExitOk) throw std::runtime_error("replayed command failed with exit code " + std::to_string(code));
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth) {
  CLI::App app{"Context-extended neural machine translation toolkit", "ctxnmt"};
  Options o;
  app.add_option("--config", o.config, "INI configuration file");
  app.add_option("--seed", o.seed, "Seed for every random stream");
  app.add_option("--threads", o.threads, "Worker threads for decoding")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "Output directory");
  app.add_flag("--version", o.version, "Print toolkit and format versions");
  app.require_subcommand(0, 1);

  auto sub = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    c->fallthrough();
    return c;
  };
  auto* prepare = sub("prepare", "Build context-extended examples from an aligned corpus");
  prepare->add_option("--mode", o.mode, "baseline, 2+1-prefix, 2+1-break or 2+2");
  prepare->add_option("--source", o.source);
  prepare->add_option("--target", o.target);
  prepare->add_option("--docs", o.docs);
  prepare->add_option("--bpe-source", o.bpe_source, "Segment the source side with this BPE model first");
  prepare->add_option("--bpe-target", o.bpe_target);
  prepare->add_option("--threshold", o.threshold, "Vocabulary threshold when segmenting");
  prepare->add_option("--stem", o.stem, "Output stem (.src/.trg/.docs/.geom)");

  auto* synth = sub("synth", "Generate the synthetic pronoun corpus");
  synth->add_option("--docs", o.synth_docs, "Number of documents");
  synth->add_option("--units-per-doc", o.units_per_doc);
  synth->add_option("--stem", o.stem);

  auto* bpe_learn = sub("bpe-learn", "Learn BPE merges from tokenized text");
  bpe_learn->add_option("--input", o.inputs, "Tokenized text file (repeatable)");
  bpe_learn->add_option("--merges", o.merges);
  bpe_learn->add_flag("--joint", o.joint, "Record that the model is shared by both languages");
  bpe_learn->add_option("--output", o.output);

  auto* bpe_apply = sub("bpe-apply", "Segment tokenized text with a BPE model");
  bpe_apply->add_option("--model", o.model);
  bpe_apply->add_option("--input", o.input);
  bpe_apply->add_option("--output", o.output);
  bpe_apply->add_option("--threshold", o.threshold);

  auto* train_cmd = sub("train", "Train a model on an extended corpus");
  train_cmd->add_option("--data", o.stem, "Extended corpus stem");
  train_cmd->add_option("--epochs", o.epochs);
  train_cmd->add_option("--savepoint-every", o.savepoint_every);
  train_cmd->add_option("--output", o.output, "Checkpoint directory");

  auto* translate = sub("translate", "Decode an extended corpus with a checkpoint ensemble");
  translate->add_option("--checkpoint", o.checkpoints, "Checkpoint file (repeatable)");
  translate->add_option("--checkpoint-dir", o.checkpoint_dir, "Use the last --ensemble checkpoints here");
  translate->add_option("--ensemble", o.ensemble);
  translate->add_option("--input", o.stem, "Extended corpus stem");
  translate->add_option("--output", o.output, "Word-level scored segments");
  translate->add_option("--raw-output", o.raw_output, "Subword output including break tokens");
  translate->add_option("--attention", o.attention, "Attention export (JSON lines)");
  translate->add_option("--segment", o.segment, "auto, last or all");
  translate->add_option("--beam", o.beam);
  translate->add_option("--alpha", o.alpha);
  translate->add_option("--coverage", o.beta);

  auto* score = sub("score", "BLEU and chrF3 of a hypothesis file");
  score->add_option("--hyp", o.hyp);
  score->add_option("--ref", o.ref);
  score->add_option("--docs", o.docs, "Document ids, needed for the extended regime");
  score->add_option("--regime", o.regime, "sentence or extended");
  score->add_option("--window", o.window);
  score->add_option("--name", o.name);
  score->add_option("--output", o.output);

  auto* attn = sub("attn-stats", "External/internal attention statistics");
  attn->add_option("--attention", o.attention);
  attn->add_option("--kind", o.kind, "2+1 or 2+2");
  attn->add_option("--min-freq", o.min_freq);
  attn->add_option("--min-cases", o.min_cases);
  attn->add_option("--basis", o.basis, "peak or mass");
  attn->add_option("--output", o.output, "Output directory");

  auto* pron = sub("pronoun-eval", "Categorize and judge translations of the ambiguous pronoun");
  pron->add_option("--source", o.source);
  pron->add_option("--ref", o.ref);
  pron->add_option("--system", o.systems, "NAME=FILE (repeatable)");
  pron->add_option("--output", o.output, "Output directory");

  auto* heat = sub("heatmap", "Export one attention record as TSV (and PGM)");
  heat->add_option("--attention", o.attention);
  heat->add_option("--id", o.id);
  heat->add_option("--output", o.output, "Output prefix");
  heat->add_flag("--pgm", o.pgm);

  auto* run = sub("run", "End-to-end experiment from the configuration");
  auto* replay = sub("replay", "Re-execute a command from its manifest");
  replay->add_option("--manifest", o.manifest);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (o.version) {
    out << version_string() << "\n";
    return kExitOk;
  }
  const auto chosen = app.get_subcommands();
  if (chosen.empty()) {
    err << app.help();
    return kExitConfig;
  }
  const std::string command = chosen.front()->get_name();
  if (chosen.front() == replay) {
    cmd_replay(o, out, err, depth);
    return kExitOk;
  }

  RunConfig config = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) config.apply_seed(*o.seed);
  if (o.threads) config.threads = *o.threads;
  if (!o.out.empty()) config.paths.out = o.out;
  Session session(command, args, config, out, err);
  if (!o.config.empty()) session.input(o.config);

  const std::map<const CLI::App*, void (*)(Session&, const Options&)> handlers = {
      {prepare, cmd_prepare}, {synth, cmd_synth},         {bpe_learn, cmd_bpe_learn}, {bpe_apply, cmd_bpe_apply},
      {train_cmd, cmd_train}, {translate, cmd_translate}, {score, cmd_score},         {attn, cmd_attn_stats},
      {pron, cmd_pronoun_eval}, {heat, cmd_heatmap},      {run, cmd_run},
  };
  handlers.at(chosen.front())(session, o);
  session.write_manifest();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err, 0);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MalformedDataError& e) {
    err << "malformed data: " << e.what() << "\n";
    return kExitMalformedData;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const InputError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitMalformedData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace ctxnmt
