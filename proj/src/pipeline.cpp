#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>

#include "ctxnmt/attnstats.hpp"
#include "ctxnmt/driver.hpp"
#include "ctxnmt/error.hpp"
#include "ctxnmt/text.hpp"
#include "ctxnmt/train.hpp"

namespace ctxnmt {

namespace fs = std::filesystem;

DataSplit split_documents(const std::vector<TranslationUnit>& units, double test_fraction) {
  validate_corpus(units);
  std::vector<std::size_t> doc_starts;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (i == 0 || units[i].doc_id != units[i - 1].doc_id) doc_starts.push_back(i);
  }
  if (doc_starts.size() < 2) throw ConfigError("holding out test documents needs at least two documents");
  auto held = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(doc_starts.size())));
  held = std::clamp<std::size_t>(held, 1, doc_starts.size() - 1);
  const std::size_t cut = doc_starts[doc_starts.size() - held];
  DataSplit split;
  split.train.assign(units.begin(), units.begin() + static_cast<std::ptrdiff_t>(cut));
  split.test.assign(units.begin() + static_cast<std::ptrdiff_t>(cut), units.end());
  return split;
}

SubwordModels learn_subwords(const std::vector<TranslationUnit>& train, const BpeConfig& config,
                             const ContextConfig& context) {
  BpeModel conventions;
  conventions.reserved_tokens = {context.break_token};
  conventions.reserved_prefix = context.context_prefix;
  std::vector<std::string> src, trg;
  for (const auto& u : train) {
    src.push_back(join_tokens(u.source));
    trg.push_back(join_tokens(u.target));
  }
  SubwordModels m;
  if (config.joint) {
    auto all = src;
    all.insert(all.end(), trg.begin(), trg.end());
    m.source = learn_bpe(count_words(all, conventions), config.num_merges, conventions);
    m.target = m.source;
  } else {
    m.source = learn_bpe(count_words(src, conventions), config.num_merges, conventions);
    m.target = learn_bpe(count_words(trg, conventions), config.num_merges, conventions);
  }
  return m;
}

std::vector<TranslationUnit> segment_units(const std::vector<TranslationUnit>& units, const SubwordModels& models,
                                           std::size_t vocab_threshold) {
  const BpeSegmenter src(models.source), trg(models.target);
  std::vector<TranslationUnit> out = units;
  for (auto& u : out) {
    u.source = src.apply(u.source, vocab_threshold);
    u.target = trg.apply(u.target, vocab_threshold);
  }
  return out;
}

Tokens detokenize(const Tokens& subwords, SegmentMode mode, const std::string& break_token,
                  const std::string& join_marker) {
  std::vector<Tokens> segments(1);
  for (const auto& t : subwords) {
    if (t == break_token) segments.emplace_back();
    else segments.back().push_back(t);
  }
  auto revert = [&](Tokens seg) {
    if (!seg.empty() && seg.back().size() >= join_marker.size() &&
        seg.back().compare(seg.back().size() - join_marker.size(), join_marker.size(), join_marker) == 0) {
      seg.back().resize(seg.back().size() - join_marker.size());
      if (seg.back().empty()) seg.pop_back();
    }
    return revert_bpe(seg, join_marker);
  };
  if (mode == SegmentMode::Last) return revert(segments.back());
  Tokens out;
  for (auto& seg : segments) {
    auto words = revert(seg);
    out.insert(out.end(), words.begin(), words.end());
  }
  return out;
}

std::vector<Translation> translate_examples(const std::vector<Checkpoint>& ensemble,
                                            const std::vector<ExtendedExample>& examples, const BeamConfig& beam,
                                            std::size_t threads) {
  if (ensemble.empty()) throw ConfigError("translate: no checkpoints given");
  const auto& sv = ensemble.front().source_vocab;
  const auto& tv = ensemble.front().target_vocab;
  Ensemble members;
  for (const auto& c : ensemble) {
    if (!(c.source_vocab == sv) || !(c.target_vocab == tv)) {
      throw ConfigError("translate: ensemble checkpoints use different vocabularies");
    }
    members.push_back(&c.params);
  }
  beam.validate();
  std::vector<Translation> out(examples.size());
  auto work = [&](std::size_t i) {
    const auto& ex = examples[i];
    Translation t;
    t.attention.source_tokens = ex.source;
    if (ex.source.empty()) {
      t.attention.weights.resize(0, 0);
      out[i] = std::move(t);
      return;
    }
    const auto hyp = beam_search(members, sv.encode(ex.source), beam);
    for (auto id : hyp.tokens) t.tokens.push_back(tv.token(id));
    t.attention.target_tokens = t.tokens;
    t.attention.weights = hyp.attention;
    t.finished = hyp.finished;
    out[i] = std::move(t);
  };
  threads = std::max<std::size_t>(1, std::min(threads, examples.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < examples.size(); ++i) work(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < examples.size(); i += threads) work(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<ExportedAttention> export_records(const std::vector<Translation>& translations,
                                              const std::vector<ExtendedExample>& examples,
                                              const std::string& break_token) {
  if (translations.size() != examples.size()) throw InputError("export_records: size mismatch");
  std::vector<ExportedAttention> out;
  for (std::size_t i = 0; i < translations.size(); ++i) {
    ExportedAttention a;
    a.id = i;
    a.record = translations[i].attention;
    a.source_focus_start = examples[i].source_focus_start;
    a.source_breaks = examples[i].source_breaks;
    a.break_token = break_token;
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

std::string g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", places, v);
  return buf;
}

class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {}

  fs::path path(const fs::path& rel) const { return root_ / rel; }

  void text(const fs::path& rel, const std::string& contents) {
    write_file_atomic(path(rel), contents);
    written_.push_back(rel);
  }
  void lines(const fs::path& rel, const std::vector<Tokens>& rows) {
    std::string s;
    for (const auto& r : rows) s += join_tokens(r) + '\n';
    text(rel, s);
  }
  void corpus(const fs::path& stem, const std::vector<TranslationUnit>& units) {
    write_corpus(path(stem), units);
    for (const char* ext : {".src", ".trg", ".docs"}) written_.push_back(with_suffix(stem, ext));
  }
  void extended(const fs::path& stem, const std::vector<ExtendedExample>& examples) {
    write_extended(path(stem), examples);
    for (const char* ext : {".src", ".trg", ".docs", ".geom"}) written_.push_back(with_suffix(stem, ext));
  }
  void record(const fs::path& rel) { written_.push_back(rel); }

  const std::vector<fs::path>& written() const { return written_; }

 private:
  fs::path root_;
  std::vector<fs::path> written_;
};

ModelKind kind_for(const ContextConfig& c) {
  return c.target_window > 0 ? ModelKind::TwoPlusTwo : ModelKind::TwoPlusOne;
}

std::vector<Tokens> targets_of(const std::vector<TranslationUnit>& units) {
  std::vector<Tokens> out;
  for (const auto& u : units) out.push_back(u.target);
  return out;
}

std::vector<std::string> docs_of(const std::vector<TranslationUnit>& units) {
  std::vector<std::string> out;
  for (const auto& u : units) out.push_back(u.doc_id);
  return out;
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config, std::ostream& log) {
  config.validate();
  config.validate_inputs();
  OutputDir out(config.paths.out);
  PipelineResult result;

  // Data.
  std::vector<TranslationUnit> units;
  if (!config.paths.source.empty()) {
    units = read_corpus(config.paths.source, config.paths.target, config.paths.docs);
  } else {
    units = generate_synthetic_corpus(SynthSpec::standard(config.synth.docs, config.synth.units_per_doc, config.seed));
  }
  if (!config.paths.test_source.empty()) {
    validate_corpus(units);
    result.data.train = std::move(units);
    result.data.test = read_corpus(config.paths.test_source, config.paths.test_target, config.paths.test_docs);
  } else {
    result.data = split_documents(units, config.test_fraction);
  }
  const auto& train_units = result.data.train;
  const auto& test_units = result.data.test;
  out.corpus("data/train", train_units);
  out.corpus("data/test", test_units);
  log << "data: " << train_units.size() << " training units, " << test_units.size() << " test units\n";

  // Subwords, learned once on unmarked text and shared by every system.
  std::vector<TranslationUnit> seg_train = train_units, seg_test = test_units;
  std::string join_marker = "@@";
  if (config.bpe_enabled) {
    const auto models = learn_subwords(train_units, config.bpe, config.context);
    join_marker = models.source.join_marker;
    out.text("data/bpe.src", serialize_bpe(models.source));
    out.text("data/bpe.trg", serialize_bpe(models.target));
    seg_train = segment_units(train_units, models, config.bpe.vocab_threshold);
    seg_test = segment_units(test_units, models, config.bpe.vocab_threshold);
    log << "bpe: " << models.source.merges.size() << " source merges, " << models.target.merges.size()
        << " target merges\n";
  }

  const auto references = targets_of(test_units);
  const auto test_docs = docs_of(test_units);
  const auto ext_refs = sliding_concatenation(references, test_docs, 2, config.context.break_token);
  std::vector<SystemScores> sentence_scores, extended_scores;
  std::string attention_summary = "system\tcorpus_external_%\tmass_average_%\tpeak_average_%\n";

  for (const auto& name : config.systems) {
    SystemResult sys;
    sys.name = name;
    sys.context = ContextConfig::from_mode(name);
    sys.context.context_prefix = config.context.context_prefix;
    sys.context.break_token = config.context.break_token;
    const fs::path dir = name;

    const auto train_ex = extend_corpus(seg_train, sys.context);
    const auto test_ex = extend_corpus(seg_test, sys.context);
    out.extended(dir / "train", train_ex);
    out.extended(dir / "test", test_ex);

    const auto data = make_training_set(train_ex, config.hyper, config.vocab_cap);
    log << name << ": training on " << data.pairs.size() << " examples (" << data.skipped << " skipped), vocab "
        << data.source_vocab.size() << "/" << data.target_vocab.size() << "\n";
    const auto trained = train(data, config.hyper, SavepointSchedule{config.savepoint_every});
    if (trained.failure) {
      sys.training_failure = trained.failure;
      log << name << ": training stopped: " << *trained.failure << "\n";
    }
    std::string losses = "epoch\tloss\n";
    for (std::size_t e = 0; e < trained.epoch_losses.size(); ++e) {
      losses += std::to_string(e + 1) + '\t' + g9(trained.epoch_losses[e]) + '\n';
      log << name << ": epoch " << e + 1 << " loss " << g9(trained.epoch_losses[e]) << "\n";
    }
    out.text(dir / "training.tsv", losses);
    for (const auto& ck : trained.checkpoints) {
      char file[64];
      std::snprintf(file, sizeof file, "ckpt-%08zu.bin", ck.step);
      const fs::path rel = dir / "checkpoints" / file;
      save_checkpoint(out.path(rel), ck);
      out.record(rel);
      sys.checkpoints.push_back(rel);
    }
    if (sys.training_failure) throw NumericError(name + ": " + *sys.training_failure);

    const std::size_t k = std::min(config.ensemble, trained.checkpoints.size());
    const std::vector<Checkpoint> ensemble(trained.checkpoints.end() - static_cast<std::ptrdiff_t>(k),
                                           trained.checkpoints.end());
    const auto translations = translate_examples(ensemble, test_ex, config.beam, config.threads);
    const SegmentMode mode = sys.context.target_window > 0 ? SegmentMode::Last : SegmentMode::All;
    for (const auto& t : translations) {
      sys.raw_outputs.push_back(t.tokens);
      sys.focus_outputs.push_back(detokenize(t.tokens, mode, sys.context.break_token, join_marker));
      if (!t.finished) ++sys.truncated;
    }
    if (sys.context.target_window > 0) {
      for (const auto& t : translations) {
        sys.extended_outputs.push_back(detokenize(t.tokens, SegmentMode::All, sys.context.break_token, join_marker));
      }
    } else {
      sys.extended_outputs = sliding_concatenation(sys.focus_outputs, test_docs, 2, sys.context.break_token);
    }
    out.lines(dir / "test.out", sys.raw_outputs);
    out.lines(dir / "test.hyp", sys.focus_outputs);
    log << name << ": decoded " << translations.size() << " units (" << sys.truncated << " truncated)\n";

    sentence_scores.push_back({name, bleu(sys.focus_outputs, references), chrf(sys.focus_outputs, references)});
    extended_scores.push_back({name, bleu(sys.extended_outputs, ext_refs), chrf(sys.extended_outputs, ext_refs)});

    const auto records = export_records(translations, test_ex, sys.context.break_token);
    std::string jsonl;
    for (const auto& r : records) jsonl += to_json_line(r) + '\n';
    out.text(dir / "attention.jsonl", jsonl);
    if (sys.context.source_window > 0) {
      const auto parts = partition_all(records, kind_for(sys.context));
      const auto mass = word_mass_stats(parts, config.analysis.min_freq);
      const auto peak = word_peak_stats(parts, config.analysis.min_freq);
      const auto majority = majority_peak_stats(parts, config.analysis.min_cases, config.analysis.majority_basis);
      out.text(dir / "attn_mass.tsv", format_word_stats(mass));
      out.text(dir / "attn_peak.tsv", format_word_stats(peak));
      out.text(dir / "attn_majority.tsv", format_majority_stats(majority));
      sys.external_proportion = corpus_external_proportion(parts);
      attention_summary += name + '\t' + fixed(100.0 * *sys.external_proportion, 2) + '\t' +
                           fixed(mass.average.proportion, 2) + '\t' + fixed(peak.average.proportion, 2) + '\n';
    }
    result.systems.push_back(std::move(sys));
  }

  // Pronoun evaluation over the scored segments.
  std::vector<std::string> names;
  for (const auto& s : result.systems) names.push_back(s.name);
  for (std::size_t i = 0; i < test_units.size(); ++i) {
    std::vector<Tokens> outputs;
    for (const auto& s : result.systems) outputs.push_back(s.focus_outputs[i]);
    auto occ = find_occurrences(test_units[i].source, test_units[i].target, outputs, config.analysis.pronoun);
    result.occurrences.insert(result.occurrences.end(), occ.begin(), occ.end());
  }
  evaluate_occurrences(result.occurrences);
  result.pronoun_table = pronoun_accuracy(result.occurrences, names.size());
  result.majority = majority_class_rate(result.occurrences, true);

  std::string tests = "comparison\tcorrect_a\twrong_a\tcorrect_b\twrong_b\tchi2\tsignificant\n";
  auto compare = [&](const std::string& label, std::size_t ca, std::size_t wa, std::size_t cb, std::size_t wb) {
    tests += label + '\t' + std::to_string(ca) + '\t' + std::to_string(wa) + '\t' + std::to_string(cb) + '\t' +
             std::to_string(wb) + '\t';
    try {
      const auto r = chi_square_2x2(ca, wa, cb, wb);
      tests += fixed(r.statistic, 4) + '\t' + (r.significant ? "yes" : "no") + '\n';
    } catch (const InputError&) {
      tests += "undefined\t-\n";
    }
  };
  const auto& all = result.pronoun_table.total_with_unknown;
  const auto& maj = result.majority;
  for (std::size_t s = 0; s < names.size(); ++s) {
    compare(names[s] + " vs majority-class", all[s].correct, all[s].total - all[s].correct, maj.majority,
            maj.total - maj.majority);
  }
  for (std::size_t s = 1; s < names.size(); ++s) {
    compare(names[0] + " vs " + names[s], all[0].correct, all[0].total - all[0].correct, all[s].correct,
            all[s].total - all[s].correct);
  }

  out.text("reports/scores.tsv", format_score_table(sentence_scores));
  out.text("reports/extended_scores.tsv", format_score_table(extended_scores));
  out.text("reports/pronoun_accuracy.tsv", format_pronoun_table(result.pronoun_table, names));
  out.text("reports/pronoun_tests.tsv", tests);
  out.text("reports/adjudication.tsv", adjudication_export(result.occurrences, names));
  out.text("reports/attention_summary.tsv", attention_summary);
  result.outputs = out.written();
  return result;
}

}  // namespace ctxnmt
