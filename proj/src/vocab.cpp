#include "ctxnmt/vocab.hpp"

#include <algorithm>
#include <map>

#include "ctxnmt/error.hpp"

namespace ctxnmt {

namespace {
const std::vector<std::string> kReserved{"<pad>", "<s>", "</s>", "<unk>"};
}

Vocabulary::Vocabulary() {
  for (const auto& r : kReserved) add(r);
}

void Vocabulary::add(const std::string& token) {
  if (index_.count(token)) throw MalformedDataError("duplicate vocabulary entry '" + token + "'");
  index_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<Tokens>& corpus, std::size_t cap) {
  std::map<std::string, std::size_t> counts;
  for (const auto& sentence : corpus) {
    for (const auto& t : sentence) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (const auto& [tok, n] : ranked) {
    if (cap && v.size() >= cap) break;
    if (v.contains(tok)) continue;
    v.add(tok);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < kNumReserved ||
      !std::equal(kReserved.begin(), kReserved.end(), tokens.begin())) {
    throw MalformedDataError("vocabulary must start with the reserved symbols");
  }
  Vocabulary v;
  for (std::size_t i = kNumReserved; i < tokens.size(); ++i) v.add(tokens[i]);
  return v;
}

TokenId Vocabulary::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<TokenId> Vocabulary::encode(const Tokens& tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

Tokens Vocabulary::decode(const std::vector<TokenId>& ids) const {
  Tokens out;
  for (auto id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    out.push_back(token(id));
  }
  return out;
}

}  // namespace ctxnmt
