#include "ctxnmt/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <unordered_set>

#include "ctxnmt/error.hpp"

namespace ctxnmt {

namespace {

bool valid_marker(const std::string& s) {
  return !s.empty() && valid_tokens(Tokens{s});
}

std::string join_positions(const std::vector<std::size_t>& positions) {
  if (positions.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(positions[i]);
  }
  return out;
}

std::size_t parse_size(std::string_view text, const std::string& file, std::size_t line) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw MalformedDataError(file, line, "expected a non-negative integer, got '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::size_t> parse_positions(std::string_view text, const std::string& file,
                                         std::size_t line) {
  std::vector<std::size_t> out;
  if (text == "-") return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? text.size() - start
                                                                          : comma - start);
    out.push_back(parse_size(piece, file, line));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

void ContextConfig::validate() const {
  if (target_window > 0 && marking != Marking::Break) {
    throw ConfigError("target-side context requires break marking");
  }
  if (marking == Marking::Prefix && !valid_marker(context_prefix)) {
    throw ConfigError("context prefix must be a non-empty whitespace-free string");
  }
  if (!valid_marker(break_token)) {
    throw ConfigError("break token must be a non-empty whitespace-free string");
  }
}

ContextConfig ContextConfig::baseline() { return {}; }

ContextConfig ContextConfig::two_plus_one_prefix() {
  ContextConfig c;
  c.source_window = 1;
  c.marking = Marking::Prefix;
  return c;
}

ContextConfig ContextConfig::two_plus_one_break() {
  ContextConfig c;
  c.source_window = 1;
  return c;
}

ContextConfig ContextConfig::two_plus_two() {
  ContextConfig c;
  c.source_window = 1;
  c.target_window = 1;
  return c;
}

ContextConfig ContextConfig::from_mode(const std::string& mode) {
  if (mode == "baseline") return baseline();
  if (mode == "2+1-prefix" || mode == "2+1") return two_plus_one_prefix();
  if (mode == "2+1-break") return two_plus_one_break();
  if (mode == "2+2") return two_plus_two();
  throw ConfigError("unknown context mode '" + mode +
                    "' (expected baseline, 2+1-prefix, 2+1-break or 2+2)");
}

std::string to_string(Marking marking) { return marking == Marking::Prefix ? "prefix" : "break"; }

Marking parse_marking(const std::string& text) {
  if (text == "prefix") return Marking::Prefix;
  if (text == "break") return Marking::Break;
  throw ConfigError("unknown marking '" + text + "' (expected prefix or break)");
}

Tokens mark_context(const Tokens& tokens, Marking marking, const std::string& prefix) {
  if (marking == Marking::Break) return tokens;
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(prefix + t);
  return out;
}

void validate_corpus(const std::vector<TranslationUnit>& units) {
  std::unordered_set<std::string> finished;
  const std::string* current = nullptr;
  std::size_t expected = 0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& u = units[i];
    if (!current || u.doc_id != *current) {
      if (current) finished.insert(*current);
      if (finished.count(u.doc_id)) {
        throw MalformedDataError("corpus", i + 1, "document '" + u.doc_id + "' is not contiguous");
      }
      current = &u.doc_id;
      expected = 0;
    }
    if (u.index_in_doc != expected) {
      throw MalformedDataError("corpus", i + 1,
                               "non-consecutive index_in_doc " + std::to_string(u.index_in_doc) +
                                   " in document '" + u.doc_id + "' (expected " +
                                   std::to_string(expected) + ")");
    }
    ++expected;
  }
}

std::vector<ExtendedExample> extend_corpus(const std::vector<TranslationUnit>& units,
                                           const ContextConfig& config) {
  config.validate();
  validate_corpus(units);

  std::vector<ExtendedExample> out;
  out.reserve(units.size());
  std::size_t doc_start = 0;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& unit = units[i];
    if (unit.index_in_doc == 0) doc_start = i;
    const std::size_t available = i - doc_start;

    ExtendedExample ex;
    ex.origin = {unit.doc_id, unit.index_in_doc};

    const auto build_side = [&](std::size_t window, bool source_side, Tokens& tokens,
                                std::vector<std::size_t>& breaks) {
      const std::size_t n = std::min(window, available);
      for (std::size_t k = i - n; k < i; ++k) {
        const Tokens& ctx = source_side ? units[k].source : units[k].target;
        const Tokens marked = mark_context(ctx, config.marking, config.context_prefix);
        tokens.insert(tokens.end(), marked.begin(), marked.end());
        if (config.marking == Marking::Break) {
          breaks.push_back(tokens.size());
          tokens.push_back(config.break_token);
        }
      }
      const Tokens& focus = source_side ? unit.source : unit.target;
      const std::size_t focus_start = tokens.size();
      tokens.insert(tokens.end(), focus.begin(), focus.end());
      return focus_start;
    };

    ex.source_focus_start = build_side(config.source_window, true, ex.source, ex.source_breaks);
    ex.target_focus_start = build_side(config.target_window, false, ex.target, ex.target_breaks);
    out.push_back(std::move(ex));
  }
  return out;
}

Tokens extract_focus(const ExtendedExample& example, Side side) {
  const Tokens& tokens = side == Side::Source ? example.source : example.target;
  const std::size_t start = side == Side::Source ? example.source_focus_start
                                                 : example.target_focus_start;
  return Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(std::min(start, tokens.size())),
                tokens.end());
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const std::string& suffix) {
  auto p = stem;
  p += suffix;
  return p;
}

std::vector<TranslationUnit> read_corpus(const std::filesystem::path& source,
                                         const std::filesystem::path& target,
                                         const std::filesystem::path& docs) {
  const auto src_lines = read_lines(source);
  const auto trg_lines = read_lines(target);
  const auto doc_lines = read_lines(docs);
  if (src_lines.size() != trg_lines.size()) {
    throw MalformedDataError(target.string(), std::min(src_lines.size(), trg_lines.size()) + 1,
                             "line count differs from " + source.string());
  }
  if (doc_lines.size() != src_lines.size()) {
    throw MalformedDataError(docs.string(), std::min(src_lines.size(), doc_lines.size()) + 1,
                             "line count differs from " + source.string());
  }

  std::vector<TranslationUnit> units;
  units.reserve(src_lines.size());
  std::set<std::string> finished;
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    TranslationUnit u;
    u.source = split_tokens(src_lines[i]);
    u.target = split_tokens(trg_lines[i]);
    if (!valid_tokens(u.source)) throw MalformedDataError(source.string(), i + 1, "empty token");
    if (!valid_tokens(u.target)) throw MalformedDataError(target.string(), i + 1, "empty token");
    u.doc_id = doc_lines[i];
    if (u.doc_id.empty()) throw MalformedDataError(docs.string(), i + 1, "empty document id");
    if (!units.empty() && units.back().doc_id == u.doc_id) {
      u.index_in_doc = units.back().index_in_doc + 1;
    } else {
      if (!units.empty()) finished.insert(units.back().doc_id);
      if (finished.count(u.doc_id)) {
        throw MalformedDataError(docs.string(), i + 1, "document '" + u.doc_id + "' is not contiguous");
      }
    }
    units.push_back(std::move(u));
  }
  return units;
}

void write_corpus(const std::filesystem::path& stem, const std::vector<TranslationUnit>& units) {
  std::vector<std::string> src, trg, docs;
  for (const auto& u : units) {
    src.push_back(join_tokens(u.source));
    trg.push_back(join_tokens(u.target));
    docs.push_back(u.doc_id);
  }
  write_lines(with_suffix(stem, ".src"), src);
  write_lines(with_suffix(stem, ".trg"), trg);
  write_lines(with_suffix(stem, ".docs"), docs);
}

void write_extended(const std::filesystem::path& stem, const std::vector<ExtendedExample>& examples) {
  std::vector<std::string> src, trg, docs, geom;
  for (const auto& e : examples) {
    src.push_back(join_tokens(e.source));
    trg.push_back(join_tokens(e.target));
    docs.push_back(e.origin.doc_id);
    geom.push_back(std::to_string(e.source_focus_start) + '\t' + std::to_string(e.target_focus_start) +
                   '\t' + std::to_string(e.origin.index_in_doc) + '\t' +
                   join_positions(e.source_breaks) + '\t' + join_positions(e.target_breaks));
  }
  write_lines(with_suffix(stem, ".src"), src);
  write_lines(with_suffix(stem, ".trg"), trg);
  write_lines(with_suffix(stem, ".docs"), docs);
  write_lines(with_suffix(stem, ".geom"), geom);
}

std::vector<ExtendedExample> read_extended(const std::filesystem::path& stem) {
  const auto src_path = with_suffix(stem, ".src");
  const auto geom_path = with_suffix(stem, ".geom");
  const auto src = read_lines(src_path);
  const auto trg = read_lines(with_suffix(stem, ".trg"));
  const auto docs = read_lines(with_suffix(stem, ".docs"));
  const auto geom = read_lines(geom_path);
  if (trg.size() != src.size() || docs.size() != src.size() || geom.size() != src.size()) {
    throw MalformedDataError(src_path.string(), 0, "extended corpus files differ in line count");
  }
  std::vector<ExtendedExample> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    ExtendedExample e;
    e.source = split_tokens(src[i]);
    e.target = split_tokens(trg[i]);
    e.origin.doc_id = docs[i];
    std::vector<std::string_view> fields;
    std::string_view line = geom[i];
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string_view::npos ? line.size() - start
                                                                        : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    const std::string gfile = geom_path.string();
    if (fields.size() != 5) throw MalformedDataError(gfile, i + 1, "expected 5 tab-separated fields");
    e.source_focus_start = parse_size(fields[0], gfile, i + 1);
    e.target_focus_start = parse_size(fields[1], gfile, i + 1);
    e.origin.index_in_doc = parse_size(fields[2], gfile, i + 1);
    e.source_breaks = parse_positions(fields[3], gfile, i + 1);
    e.target_breaks = parse_positions(fields[4], gfile, i + 1);
    if (e.source_focus_start > e.source.size() || e.target_focus_start > e.target.size()) {
      throw MalformedDataError(gfile, i + 1, "focus start beyond segment length");
    }
    for (auto b : e.source_breaks) {
      if (b >= e.source.size()) throw MalformedDataError(gfile, i + 1, "break position out of range");
    }
    for (auto b : e.target_breaks) {
      if (b >= e.target.size()) throw MalformedDataError(gfile, i + 1, "break position out of range");
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace ctxnmt
