#include "sigfolio/words.hpp"

#include <stdexcept>

namespace sigfolio {

std::size_t words_at_level(int alphabet, int level) {
  std::size_t n = 1;
  for (int k = 0; k < level; ++k) n *= static_cast<std::size_t>(alphabet);
  return n;
}

std::size_t words_up_to_level(int alphabet, int max_level) {
  std::size_t total = 0;
  for (int k = 0; k <= max_level; ++k) total += words_at_level(alphabet, k);
  return total;
}

std::vector<Word> enumerate_words(int alphabet, int max_level) {
  if (alphabet < 1) throw std::invalid_argument("enumerate_words: alphabet must be >= 1");
  if (max_level < 0) throw std::invalid_argument("enumerate_words: level must be >= 0");
  std::vector<Word> out;
  out.reserve(words_up_to_level(alphabet, max_level));
  out.emplace_back();
  std::vector<Word> current{Word{}};
  for (int len = 1; len <= max_level; ++len) {
    std::vector<Word> next;
    next.reserve(current.size() * static_cast<std::size_t>(alphabet));
    for (const Word& w : current)
      for (int letter = 1; letter <= alphabet; ++letter) next.push_back(w.appended(letter));
    out.insert(out.end(), next.begin(), next.end());
    current = std::move(next);
  }
  return out;
}

std::size_t word_level_index(const Word& w, int alphabet) {
  std::size_t idx = 0;
  for (int letter : w.letters) {
    if (letter < 1 || letter > alphabet) throw std::invalid_argument("word letter out of alphabet");
    idx = idx * static_cast<std::size_t>(alphabet) + static_cast<std::size_t>(letter - 1);
  }
  return idx;
}

std::size_t word_global_index(const Word& w, int alphabet) {
  return words_up_to_level(alphabet, w.length() - 1) * (w.length() > 0 ? 1 : 0) +
         (w.length() > 0 ? word_level_index(w, alphabet) : 0);
}

WordSum shuffle(const Word& a, const Word& b) {
  // e_I ⧢ e_∅ = e_∅ ⧢ e_I = e_I
  if (a.empty()) return WordSum{{b, 1}};
  if (b.empty()) return WordSum{{a, 1}};
  // (e_I ⊗ e_i) ⧢ (e_J ⊗ e_j) = (e_I ⧢ (e_J ⊗ e_j)) ⊗ e_i + ((e_I ⊗ e_i) ⧢ e_J) ⊗ e_j
  WordSum out;
  for (const auto& [w, k] : shuffle(a.dropped_last(), b)) out[w.appended(a.back())] += k;
  for (const auto& [w, k] : shuffle(a, b.dropped_last())) out[w.appended(b.back())] += k;
  return out;
}

std::string word_label(const Word& w, int alphabet) {
  if (w.empty()) return "∅";
  std::string s;
  for (std::size_t i = 0; i < w.letters.size(); ++i) {
    if (alphabet > 9 && i > 0) s += '.';
    s += std::to_string(w.letters[i]);
  }
  return s;
}

}  // namespace sigfolio
