#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace sigfolio {

// A word (multi-index) over the alphabet {1, ..., n}. The empty word is the
// index of the constant coordinate of the tensor algebra. Words are ordered
// by length first, then lexicographically; the rank of a word in that order
// is its global feature index.
struct Word {
  std::vector<int> letters;

  Word() = default;
  explicit Word(std::vector<int> ls) : letters(std::move(ls)) {}
  Word(std::initializer_list<int> ls) : letters(ls) {}

  int length() const { return static_cast<int>(letters.size()); }
  bool empty() const { return letters.empty(); }
  int back() const { return letters.back(); }

  Word dropped_last() const {
    Word w = *this;
    w.letters.pop_back();
    return w;
  }
  Word appended(int letter) const {
    Word w = *this;
    w.letters.push_back(letter);
    return w;
  }
  // concatenation (word of a followed by word of b)
  Word concat(const Word& other) const {
    Word w = *this;
    w.letters.insert(w.letters.end(), other.letters.begin(), other.letters.end());
    return w;
  }

  bool operator==(const Word& o) const { return letters == o.letters; }
  bool operator!=(const Word& o) const { return letters != o.letters; }
};

// (length, lex) total order.
struct WordOrder {
  bool operator()(const Word& a, const Word& b) const {
    if (a.length() != b.length()) return a.length() < b.length();
    return a.letters < b.letters;
  }
};

// Integer linear combination of words; zero coefficients are never stored.
using WordSum = std::map<Word, long long, WordOrder>;

// All words over {1..alphabet} of length <= max_level, in (length, lex)
// order. The position of a word in this list is its global feature index.
std::vector<Word> enumerate_words(int alphabet, int max_level);

// Number of words of length exactly `level` (alphabet^level).
std::size_t words_at_level(int alphabet, int level);
// Number of words of length <= max_level.
std::size_t words_up_to_level(int alphabet, int max_level);

// Index of a word within its own level, in lex order.
std::size_t word_level_index(const Word& w, int alphabet);
// Global (length, lex) rank. Equals the position in enumerate_words.
std::size_t word_global_index(const Word& w, int alphabet);

// Shuffle product e_I ⧢ e_J. Total coefficient mass is binom(|I|+|J|, |I|).
WordSum shuffle(const Word& a, const Word& b);

// Human-readable label: "∅" for the empty word, digits concatenated for
// alphabets up to 9 ("12"), dot-separated otherwise ("3.11.2").
std::string word_label(const Word& w, int alphabet);

}  // namespace sigfolio
