#include <array>
#include <string>

#include "ctxnmt/corpus.hpp"
#include "ctxnmt/error.hpp"
#include "ctxnmt/rng.hpp"

namespace ctxnmt {

namespace {

struct Frame {
  const char* source;
  const char* target;
};

// {A} accusative article, {N} source noun, {n} target noun, {V} copula,
// {v} target copula, {P} source pronoun, {p} target pronoun.
constexpr std::array<Frame, 5> kAntecedentFrames{{
    {"ich sehe {A} {N} .", "i see the {n} ."},
    {"wir kaufen {A} {N} .", "we buy the {n} ."},
    {"hast du {A} {N} gefunden ?", "did you find the {n} ?"},
    {"{D} {N} {V} hier .", "the {n} {v} here ."},
    {"ich mag {A} {N} .", "i like the {n} ."},
}};

constexpr std::array<Frame, 5> kPronounFrames{{
    {"siehst du {P} ?", "do you see {p} ?"},
    {"ich finde {P} nicht .", "i cannot find {p} ."},
    {"wir brauchen {P} .", "we need {p} ."},
    {"hol {P} bitte .", "get {p} please ."},
    {"wo hast du {P} gefunden ?", "where did you find {p} ?"},
}};

constexpr std::array<const char*, kNumNounClasses> kNominative{"die", "der", "das", "die"};
constexpr std::array<const char*, kNumNounClasses> kAccusative{"die", "den", "das", "die"};
constexpr std::array<const char*, kNumNounClasses> kCopulaSource{"ist", "ist", "ist", "sind"};
constexpr std::array<const char*, kNumNounClasses> kCopulaTarget{"is", "is", "is", "are"};

std::string fill(std::string pattern, const std::array<std::pair<std::string, std::string>, 7>& slots) {
  for (const auto& [key, value] : slots) {
    std::size_t pos;
    while ((pos = pattern.find(key)) != std::string::npos) pattern.replace(pos, key.size(), value);
  }
  return pattern;
}

}  // namespace

std::string to_string(NounClass c) {
  switch (c) {
    case NounClass::Fem: return "fem";
    case NounClass::Masc: return "masc";
    case NounClass::Neut: return "neut";
    case NounClass::Plural: return "plural";
  }
  return "?";
}

SynthSpec SynthSpec::standard(std::size_t num_docs, std::size_t units_per_doc, std::uint64_t seed) {
  SynthSpec s;
  s.num_docs = num_docs;
  s.units_per_doc = units_per_doc;
  s.rng_seed = seed;
  s.pronoun_for_class = {"her", "him", "it", "them"};
  s.lexicon = {
      {"Katze", "cat", NounClass::Fem},       {"Lampe", "lamp", NounClass::Fem},
      {"Tasche", "bag", NounClass::Fem},      {"Uhr", "watch", NounClass::Fem},
      {"Jacke", "jacket", NounClass::Fem},    {"Hund", "dog", NounClass::Masc},
      {"Tisch", "table", NounClass::Masc},    {"Schlüssel", "key", NounClass::Masc},
      {"Mantel", "coat", NounClass::Masc},    {"Koffer", "suitcase", NounClass::Masc},
      {"Buch", "book", NounClass::Neut},      {"Auto", "car", NounClass::Neut},
      {"Fahrrad", "bike", NounClass::Neut},   {"Messer", "knife", NounClass::Neut},
      {"Bild", "picture", NounClass::Neut},   {"Kinder", "children", NounClass::Plural},
      {"Blumen", "flowers", NounClass::Plural}, {"Schuhe", "shoes", NounClass::Plural},
      {"Bücher", "books", NounClass::Plural}, {"Äpfel", "apples", NounClass::Plural},
  };
  return s;
}

void SynthSpec::validate() const {
  if (lexicon.empty()) throw ConfigError("synthetic lexicon is empty");
  for (const auto& p : pronoun_for_class) {
    if (p.empty()) throw ConfigError("pronoun mapping must cover every noun class");
  }
  if (source_pronoun.empty()) throw ConfigError("source pronoun is empty");
  for (const auto& e : lexicon) {
    if (!valid_tokens({e.source_noun, e.target_noun})) {
      throw ConfigError("lexicon entries must be single non-empty tokens");
    }
  }
}

std::vector<TranslationUnit> generate_synthetic_corpus(const SynthSpec& spec) {
  spec.validate();
  Rng rng = Rng::stream(spec.rng_seed, "synth");

  std::array<std::vector<const LexiconEntry*>, kNumNounClasses> by_class;
  for (const auto& e : spec.lexicon) by_class[static_cast<std::size_t>(e.noun_class)].push_back(&e);
  std::vector<std::size_t> classes;
  for (std::size_t c = 0; c < kNumNounClasses; ++c) {
    if (!by_class[c].empty()) classes.push_back(c);
  }

  std::vector<TranslationUnit> units;
  units.reserve(spec.num_docs * spec.units_per_doc);
  for (std::size_t d = 0; d < spec.num_docs; ++d) {
    const std::string doc_id = "doc" + std::to_string(d);
    const LexiconEntry* antecedent = nullptr;
    for (std::size_t i = 0; i < spec.units_per_doc; ++i) {
      TranslationUnit u;
      u.doc_id = doc_id;
      u.index_in_doc = i;
      const Frame* frame;
      std::size_t cls;
      if (i % 2 == 0) {
        cls = classes[rng.below(classes.size())];
        antecedent = by_class[cls][rng.below(by_class[cls].size())];
        frame = &kAntecedentFrames[rng.below(kAntecedentFrames.size())];
      } else {
        cls = static_cast<std::size_t>(antecedent->noun_class);
        frame = &kPronounFrames[rng.below(kPronounFrames.size())];
      }
      const std::array<std::pair<std::string, std::string>, 7> slots{{
          {"{A}", kAccusative[cls]},
          {"{D}", kNominative[cls]},
          {"{N}", antecedent->source_noun},
          {"{n}", antecedent->target_noun},
          {"{V}", kCopulaSource[cls]},
          {"{v}", kCopulaTarget[cls]},
          {"{P}", spec.source_pronoun},
      }};
      std::string target = fill(frame->target, slots);
      const auto p = target.find("{p}");
      if (p != std::string::npos) target.replace(p, 3, spec.pronoun_for_class[cls]);
      u.source = split_tokens(fill(frame->source, slots));
      u.target = split_tokens(target);
      units.push_back(std::move(u));
    }
  }
  return units;
}

}  // namespace ctxnmt
