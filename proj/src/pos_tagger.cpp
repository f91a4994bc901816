// Copyright 2026 The ATSC Prompts Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "atsc/pos_tagger.hpp"

#include <array>
#include <cctype>
#include <unordered_map>

#include "atsc/tokenizer.hpp"
#include "atsc/types.hpp"

namespace atsc {
namespace {

constexpr std::array<std::string_view, 17> kNames = {
    "ADJ",  "ADP",   "ADV",  "AUX",  "CCONJ", "DET",   "INTJ", "NOUN", "NUM",
    "PART", "PRON",  "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};

const std::unordered_map<std::string, Upos>& lexicon() {
  static const auto* table = [] {
    auto* t = new std::unordered_map<std::string, Upos>;
    auto put = [&](Upos tag, std::initializer_list<const char*> words) {
      for (const char* w : words) t->emplace(w, tag);
    };
    put(Upos::DET, {"the", "a", "an", "this", "that", "these", "those", "every", "each",
                    "some", "any", "no", "all", "both", "another", "either", "neither",
                    "which", "what", "whose"});
    put(Upos::PRON, {"i", "me", "my", "mine", "you", "your", "yours", "he", "him", "his",
                     "she", "her", "hers", "it", "its", "we", "us", "our", "ours", "they",
                     "them", "their", "theirs", "myself", "yourself", "itself", "themselves",
                     "ourselves", "who", "whom", "someone", "something", "anything",
                     "everything", "nothing", "everyone", "anyone", "one"});
    put(Upos::ADP, {"in", "on", "at", "by", "for", "with", "about", "against", "between",
                    "into", "through", "during", "before", "after", "above", "below", "to",
                    "from", "up", "down", "of", "off", "over", "under", "around", "near",
                    "without", "within", "like", "than", "across", "behind", "beside",
                    "besides", "toward", "towards", "upon", "via", "per"});
    put(Upos::AUX, {"is", "am", "are", "was", "were", "be", "been", "being", "has", "have",
                    "had", "having", "do", "does", "did", "will", "would", "shall",
                    "should", "can", "could", "may", "might", "must", "'s", "'re", "'m",
                    "'ve", "'ll", "'d", "wo", "ca"});
    put(Upos::CCONJ, {"and", "or", "but", "nor", "yet", "plus"});
    put(Upos::SCONJ, {"if", "because", "since", "although", "though", "while", "whereas",
                      "unless", "until", "when", "whenever", "where", "whether", "as",
                      "so", "once"});
    put(Upos::PART, {"not", "n't", "t", "s", "'", "there"});
    put(Upos::ADV, {"very", "really", "too", "also", "just", "only", "even", "still",
                    "quite", "rather", "so", "then", "now", "here", "again", "never",
                    "always", "often", "sometimes", "ever", "already", "soon", "well",
                    "almost", "pretty", "extremely", "highly", "definitely", "probably",
                    "maybe", "perhaps", "however", "instead", "back", "away", "anyway",
                    "enough", "more", "most", "less", "least", "much", "how", "why",
                    "once", "twice", "overall", "totally", "absolutely", "super"});
    put(Upos::INTJ, {"oh", "wow", "yes", "hey", "ok", "okay", "please", "yeah", "ugh"});
    put(Upos::NUM, {"zero", "two", "three", "four", "five", "six", "seven", "eight",
                    "nine", "ten", "twenty", "hundred", "thousand", "million"});
    put(Upos::ADJ, {"good", "bad", "great", "nice", "fine", "best", "better", "worse",
                    "worst", "new", "old", "big", "small", "large", "little", "fast",
                    "slow", "hot", "cold", "fresh", "cheap", "expensive", "friendly",
                    "rude", "clean", "dirty", "happy", "sad", "poor", "rich", "tasty",
                    "awful", "terrible", "horrible", "excellent", "amazing", "awesome",
                    "perfect", "decent", "average", "long", "short", "high", "low",
                    "easy", "hard", "quick", "light", "heavy", "bright", "dark", "loud",
                    "quiet", "warm", "sweet", "sour", "bland", "salty", "spicy", "huge",
                    "tiny", "crisp", "smooth", "slim", "thin", "thick", "pleasant",
                    "same", "other", "first", "last", "few", "many", "several", "own",
                    "overpriced", "mediocre", "fantastic", "wonderful", "delicious",
                    "attentive", "reliable", "sturdy", "solid", "cool", "free", "full",
                    "ok", "okay", "sure", "real", "right", "wrong", "true", "whole",
                    "main", "extra", "able", "glad", "sorry", "worth"});
    put(Upos::VERB, {"get", "got", "go", "went", "gone", "make", "made", "take", "took",
                     "come", "came", "see", "saw", "seen", "know", "knew", "think",
                     "thought", "want", "give", "gave", "use", "used", "find", "found",
                     "tell", "told", "feel", "felt", "try", "tried", "leave", "left",
                     "say", "said", "buy", "bought", "love", "loved", "like", "liked",
                     "hate", "need", "work", "works", "worked", "recommend", "eat", "ate",
                     "order", "ordered", "wait", "waited", "run", "runs", "ran", "keep",
                     "kept", "seem", "seems", "seemed", "look", "looks", "looked", "let",
                     "put", "bring", "brought", "serve", "served", "enjoy", "enjoyed",
                     "return", "returned", "arrive", "arrived", "start", "stop"});
    return t;
  }();
  return *table;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() + 1 && s.substr(s.size() - suffix.size()) == suffix;
}

bool all_digits(std::string_view s) {
  bool digit = false;
  for (char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c))) digit = true;
    else if (c != '.' && c != ',') return false;
  }
  return digit;
}

Upos tag_word(const std::string& word, bool sentence_initial, Upos previous) {
  unsigned char first = static_cast<unsigned char>(word[0]);
  if (word.size() == 1 && std::ispunct(first))
    return std::string_view("$%&+=<>#@^~|*").find(word[0]) != std::string_view::npos
               ? Upos::SYM
               : Upos::PUNCT;
  if (all_digits(word)) return Upos::NUM;

  std::string lower;
  for (char c : word) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (auto it = lexicon().find(lower); it != lexicon().end()) {
    // "like" after an auxiliary or pronoun is a verb.
    if (lower == "like" && (previous == Upos::PRON || previous == Upos::AUX)) return Upos::VERB;
    return it->second;
  }
  if (first >= 0x80) return Upos::NOUN;
  if (std::isupper(first) && !sentence_initial) return Upos::PROPN;

  if (ends_with(lower, "ly")) return Upos::ADV;
  for (std::string_view s : {"ous", "ful", "able", "ible", "ive", "less", "ish", "ic",
                             "ical", "est", "ant", "ent", "ary"})
    if (ends_with(lower, s)) return Upos::ADJ;
  if (ends_with(lower, "ing") || ends_with(lower, "ed")) {
    // Participles after a determiner read as modifiers ("the fried rice").
    if (previous == Upos::DET || previous == Upos::ADV) return Upos::ADJ;
    return Upos::VERB;
  }
  if (ends_with(lower, "al") && !ends_with(lower, "ial")) return Upos::ADJ;
  if (previous == Upos::PRON && !ends_with(lower, "s"))
    return Upos::VERB;
  return Upos::NOUN;
}

}  // namespace

std::string_view to_string(Upos tag) { return kNames[static_cast<std::size_t>(tag)]; }

Upos parse_upos(std::string_view s) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == s) return static_cast<Upos>(i);
  throw ParseError("unknown POS tag '" + std::string(s) + "'");
}

std::vector<TaggedToken> tag_sentence(std::string_view sentence) {
  std::vector<TaggedToken> out;
  Upos previous = Upos::PUNCT;
  bool initial = true;
  for (auto& w : split_words(sentence)) {
    Upos tag = tag_word(w.text, initial, previous);
    initial = tag == Upos::PUNCT && (w.text == "." || w.text == "!" || w.text == "?");
    previous = tag;
    out.push_back({std::move(w.text), w.begin, w.end, tag});
  }
  return out;
}

}  // namespace atsc
