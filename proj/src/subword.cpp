#include "ctxnmt/subword.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <sstream>

#include "ctxnmt/error.hpp"

namespace ctxnmt {

bool BpeModel::is_reserved(std::string_view token) const {
  if (!reserved_prefix.empty() && token.substr(0, reserved_prefix.size()) == reserved_prefix) {
    return true;
  }
  return std::find(reserved_tokens.begin(), reserved_tokens.end(), token) != reserved_tokens.end();
}

std::map<std::string, std::size_t> count_words(const std::vector<std::string>& lines,
                                               const BpeModel& conventions) {
  std::map<std::string, std::size_t> counts;
  for (const auto& line : lines) {
    for (auto& tok : split_tokens(line)) {
      if (tok.empty() || conventions.is_reserved(tok)) continue;
      ++counts[tok];
    }
  }
  return counts;
}

namespace {

std::vector<std::string> initial_symbols(std::string_view word, const std::string& eow) {
  auto chars = utf8_chars(word);
  if (!chars.empty()) chars.back() += eow;
  return chars;
}

}  // namespace

BpeModel learn_bpe(const std::map<std::string, std::size_t>& word_frequencies,
                   std::size_t num_merges, const BpeModel& conventions) {
  BpeModel model = conventions;
  model.merges.clear();
  model.subword_vocab.clear();

  struct Word {
    std::vector<std::string> symbols;
    std::size_t count;
  };
  std::vector<Word> words;
  for (const auto& [w, c] : word_frequencies) {
    if (w.empty() || c == 0 || model.is_reserved(w)) continue;
    words.push_back({initial_symbols(w, model.eow_marker), c});
  }

  for (std::size_t step = 0; step < num_merges; ++step) {
    std::map<SymbolPair, std::size_t> pair_counts;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        pair_counts[{w.symbols[i], w.symbols[i + 1]}] += w.count;
      }
    }
    if (pair_counts.empty()) break;
    // std::map iterates in (left, right) order, so the first maximum wins ties.
    auto best = pair_counts.begin();
    for (auto it = pair_counts.begin(); it != pair_counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    const SymbolPair pair = best->first;
    const std::string merged = pair.first + pair.second;
    model.merges.push_back(pair);
    for (auto& w : words) {
      std::vector<std::string> next;
      next.reserve(w.symbols.size());
      for (std::size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == pair.first && w.symbols[i + 1] == pair.second) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(w.symbols[i]);
        }
      }
      w.symbols = std::move(next);
    }
  }

  const BpeSegmenter segmenter(model);
  for (const auto& [w, c] : word_frequencies) {
    if (w.empty() || c == 0 || model.is_reserved(w)) continue;
    for (const auto& piece : segmenter.apply(w, 0)) model.subword_vocab[piece] += c;
  }
  return model;
}

BpeSegmenter::BpeSegmenter(const BpeModel& model) : model_(model) {
  for (std::size_t r = 0; r < model_.merges.size(); ++r) {
    rank_.emplace(model_.merges[r], r);
    origin_.emplace(model_.merges[r].first + model_.merges[r].second, model_.merges[r]);
  }
}

std::vector<std::string> BpeSegmenter::merge_symbols(std::string_view token) const {
  auto symbols = initial_symbols(token, model_.eow_marker);
  while (symbols.size() > 1) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      const auto it = rank_.find({symbols[i], symbols[i + 1]});
      if (it != rank_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == std::numeric_limits<std::size_t>::max()) break;
    const auto& pair = model_.merges[best_rank];
    std::vector<std::string> next;
    next.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i + 1 < symbols.size() && symbols[i] == pair.first && symbols[i + 1] == pair.second) {
        next.push_back(pair.first + pair.second);
        ++i;
      } else {
        next.push_back(symbols[i]);
      }
    }
    symbols = std::move(next);
  }
  return symbols;
}

std::string BpeSegmenter::emitted(const std::string& symbol, bool final) const {
  if (final) {
    const auto& eow = model_.eow_marker;
    if (symbol.size() >= eow.size() && symbol.compare(symbol.size() - eow.size(), eow.size(), eow) == 0) {
      return symbol.substr(0, symbol.size() - eow.size());
    }
    return symbol;
  }
  return symbol + model_.join_marker;
}

void BpeSegmenter::split_recursive(const std::string& symbol, bool final, std::size_t threshold,
                                   Tokens& out) const {
  const std::string form = emitted(symbol, final);
  const auto it = model_.subword_vocab.find(form);
  const std::size_t count = it == model_.subword_vocab.end() ? 0 : it->second;
  const auto origin = origin_.find(symbol);
  if (count >= threshold || origin == origin_.end()) {
    out.push_back(form);
    return;
  }
  split_recursive(origin->second.first, false, threshold, out);
  split_recursive(origin->second.second, final, threshold, out);
}

Tokens BpeSegmenter::apply(std::string_view token, std::size_t vocab_threshold) const {
  if (token.empty()) throw InputError("apply_bpe: empty token");
  if (model_.is_reserved(token)) return {std::string(token)};
  const auto symbols = merge_symbols(token);
  Tokens out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const bool final = i + 1 == symbols.size();
    if (vocab_threshold == 0) {
      out.push_back(emitted(symbols[i], final));
    } else {
      split_recursive(symbols[i], final, vocab_threshold, out);
    }
  }
  return out;
}

Tokens BpeSegmenter::apply(const Tokens& tokens, std::size_t vocab_threshold) const {
  Tokens out;
  for (const auto& t : tokens) {
    auto pieces = apply(t, vocab_threshold);
    out.insert(out.end(), std::make_move_iterator(pieces.begin()), std::make_move_iterator(pieces.end()));
  }
  return out;
}

Tokens apply_bpe(const BpeModel& model, std::string_view token, std::size_t vocab_threshold) {
  return BpeSegmenter(model).apply(token, vocab_threshold);
}

Tokens revert_bpe(const Tokens& subwords, std::string_view join_marker) {
  Tokens out;
  std::string pending;
  bool open = false;
  for (const auto& piece : subwords) {
    if (!join_marker.empty() && piece.size() >= join_marker.size() &&
        std::string_view(piece).substr(piece.size() - join_marker.size()) == join_marker) {
      pending.append(piece, 0, piece.size() - join_marker.size());
      open = true;
    } else {
      pending += piece;
      out.push_back(std::move(pending));
      pending.clear();
      open = false;
    }
  }
  if (open) throw MalformedDataError("revert_bpe: dangling join marker at end of sequence");
  return out;
}

std::string serialize_bpe(const BpeModel& model) {
  std::ostringstream os;
  os << "#ctxnmt-bpe version=1 eow=" << model.eow_marker << " join=" << model.join_marker
     << " reserved=" << join_tokens(model.reserved_tokens, ",")
     << " reserved_prefix=" << model.reserved_prefix << " merges=" << model.merges.size()
     << " vocab=" << model.subword_vocab.size() << '\n';
  for (const auto& [l, r] : model.merges) os << l << ' ' << r << '\n';
  for (const auto& [s, c] : model.subword_vocab) os << s << '\t' << c << '\n';
  return os.str();
}

BpeModel parse_bpe(const std::string& text, const std::string& origin) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind("#ctxnmt-bpe ", 0) != 0) {
    throw MalformedDataError(origin, 1, "missing #ctxnmt-bpe header");
  }
  BpeModel model;
  model.reserved_tokens.clear();
  std::size_t num_merges = 0, num_vocab = 0;
  bool have_version = false;
  for (const auto& field : split_tokens(line.substr(12))) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw MalformedDataError(origin, 1, "bad header field '" + field + "'");
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    const auto number = [&] {
      std::size_t v = 0;
      const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
      if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw MalformedDataError(origin, 1, "bad number in header field '" + field + "'");
      }
      return v;
    };
    if (key == "version") {
      if (number() != 1) throw MalformedDataError(origin, 1, "unsupported BPE file version " + value);
      have_version = true;
    } else if (key == "eow") {
      model.eow_marker = value;
    } else if (key == "join") {
      model.join_marker = value;
    } else if (key == "reserved") {
      std::size_t start = 0;
      while (start < value.size()) {
        const auto comma = value.find(',', start);
        model.reserved_tokens.push_back(value.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    } else if (key == "reserved_prefix") {
      model.reserved_prefix = value;
    } else if (key == "merges") {
      num_merges = number();
    } else if (key == "vocab") {
      num_vocab = number();
    } else {
      throw MalformedDataError(origin, 1, "unknown header field '" + key + "'");
    }
  }
  if (!have_version) throw MalformedDataError(origin, 1, "header lacks version");

  std::size_t lineno = 1;
  for (std::size_t i = 0; i < num_merges; ++i) {
    ++lineno;
    if (!std::getline(is, line)) throw MalformedDataError(origin, lineno, "truncated merge list");
    const auto parts = split_tokens(line);
    if (parts.size() != 2 || !valid_tokens(parts)) {
      throw MalformedDataError(origin, lineno, "merge line must hold two symbols");
    }
    model.merges.emplace_back(parts[0], parts[1]);
  }
  for (std::size_t i = 0; i < num_vocab; ++i) {
    ++lineno;
    if (!std::getline(is, line)) throw MalformedDataError(origin, lineno, "truncated vocabulary");
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw MalformedDataError(origin, lineno, "vocabulary line must be subword<TAB>count");
    }
    std::size_t count = 0;
    const auto res = std::from_chars(line.data() + tab + 1, line.data() + line.size(), count);
    if (res.ec != std::errc() || res.ptr != line.data() + line.size()) {
      throw MalformedDataError(origin, lineno, "bad vocabulary count");
    }
    model.subword_vocab.emplace(line.substr(0, tab), count);
  }
  if (std::getline(is, line) && !line.empty()) {
    throw MalformedDataError(origin, lineno + 1, "trailing content after vocabulary");
  }
  return model;
}

void save_bpe(const std::filesystem::path& path, const BpeModel& model) {
  write_file_atomic(path, serialize_bpe(model));
}

BpeModel load_bpe(const std::filesystem::path& path) {
  return parse_bpe(read_file(path), path.string());
}

}  // namespace ctxnmt
