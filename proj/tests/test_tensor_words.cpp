#include <doctest.h>

#include <map>
#include <random>

#include "sigfolio/tensor.hpp"
#include "sigfolio/words.hpp"

using namespace sigfolio;

namespace {

// Independent shuffle oracle: enumerate every interleaving of the two
// letter sequences explicitly and tally the resulting words.
void interleave(const std::vector<int>& a, std::size_t i, const std::vector<int>& b, std::size_t j,
                std::vector<int>& current, std::map<Word, long long, WordOrder>& tally) {
  if (i == a.size() && j == b.size()) {
    ++tally[Word(current)];
    return;
  }
  if (i < a.size()) {
    current.push_back(a[i]);
    interleave(a, i + 1, b, j, current, tally);
    current.pop_back();
  }
  if (j < b.size()) {
    current.push_back(b[j]);
    interleave(a, i, b, j + 1, current, tally);
    current.pop_back();
  }
}

std::map<Word, long long, WordOrder> shuffle_oracle(const Word& a, const Word& b) {
  std::map<Word, long long, WordOrder> tally;
  std::vector<int> current;
  interleave(a.letters, 0, b.letters, 0, current, tally);
  return tally;
}

long long binomial(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

TruncatedTensor random_tensor(int alphabet, int level, std::mt19937_64& rng, bool group_like) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  TruncatedTensor t(alphabet, level);
  for (int k = 0; k <= level; ++k)
    for (double& x : t.level_data(k)) x = uni(rng);
  t.level_data(0)[0] = group_like ? 1.0 : 0.0;
  return t;
}

// Word-indexed product oracle: quadruple loop over level pairs and the
// words of each level, using concatenation of words instead of offsets.
TruncatedTensor naive_mul(const TruncatedTensor& a, const TruncatedTensor& b) {
  const int N = a.level();
  TruncatedTensor c(a.alphabet(), N);
  for (int la = 0; la <= N; ++la)
    for (int lb = 0; la + lb <= N; ++lb)
      for (const Word& u : enumerate_words(a.alphabet(), la))
        if (u.length() == la)
          for (const Word& v : enumerate_words(a.alphabet(), lb))
            if (v.length() == lb) {
              const Word w = u.concat(v);
              c.set_coeff(w, c.coeff(w) + a.coeff(u) * b.coeff(v));
            }
  return c;
}

}  // namespace

TEST_CASE("enumerate_words: order and counts") {
  auto w21 = enumerate_words(2, 1);
  REQUIRE(w21.size() == 3);
  CHECK(w21[0] == Word{});
  CHECK(w21[1] == Word{1});
  CHECK(w21[2] == Word{2});

  auto w22 = enumerate_words(2, 2);
  REQUIRE(w22.size() == 7);
  CHECK(w22[3] == Word{1, 1});
  CHECK(w22[4] == Word{1, 2});
  CHECK(w22[5] == Word{2, 1});
  CHECK(w22[6] == Word{2, 2});

  CHECK(enumerate_words(3, 3).size() == 40);  // 1 + 3 + 9 + 27

  // Position in the enumeration is the global index.
  const auto words = enumerate_words(3, 3);
  for (std::size_t i = 0; i < words.size(); ++i) CHECK(word_global_index(words[i], 3) == i);
}

TEST_CASE("shuffle: base cases") {
  const WordSum s = shuffle(Word{1}, Word{2});
  REQUIRE(s.size() == 2);
  CHECK(s.at(Word{1, 2}) == 1);
  CHECK(s.at(Word{2, 1}) == 1);

  const WordSum e = shuffle(Word{1}, Word{});
  REQUIRE(e.size() == 1);
  CHECK(e.at(Word{1}) == 1);
}

TEST_CASE("shuffle: matches exhaustive interleaving enumeration") {
  const Word a{1, 2};
  const Word b{1};
  const WordSum got = shuffle(a, b);
  const auto want = shuffle_oracle(a, b);
  REQUIRE(got.size() == want.size());
  for (const auto& [w, k] : want) CHECK(got.at(w) == k);
}

TEST_CASE("shuffle: coefficient mass and commutativity up to length 4, alphabet <= 4") {
  for (int alphabet = 1; alphabet <= 4; ++alphabet) {
    const auto words = enumerate_words(alphabet, 4);
    // Deterministic subsample to keep the suite quick.
    for (std::size_t ia = 0; ia < words.size(); ia += 7)
      for (std::size_t ib = 0; ib < words.size(); ib += 11) {
        const Word& a = words[ia];
        const Word& b = words[ib];
        const WordSum ab = shuffle(a, b);
        long long mass = 0;
        for (const auto& [w, k] : ab) {
          CHECK(w.length() == a.length() + b.length());
          mass += k;
        }
        CHECK(mass == binomial(a.length() + b.length(), a.length()));
        CHECK(ab == shuffle(b, a));
      }
  }
}

TEST_CASE("tensor_mul: unit element and rank-one product") {
  std::mt19937_64 rng(7);
  const TruncatedTensor a = random_tensor(2, 3, rng, true);
  const TruncatedTensor one = TruncatedTensor::unit(2, 3);
  CHECK(max_abs_diff(tensor_mul(a, one), a) == 0.0);
  CHECK(max_abs_diff(tensor_mul(one, a), a) == 0.0);

  // (1, v, 0) ⊗ (1, w, 0): level 2 is the outer product v ⊗ w.
  TruncatedTensor x = TruncatedTensor::unit(2, 2);
  TruncatedTensor y = TruncatedTensor::unit(2, 2);
  x.set_coeff(Word{1}, 2.0);
  x.set_coeff(Word{2}, -1.0);
  y.set_coeff(Word{1}, 0.5);
  y.set_coeff(Word{2}, 3.0);
  const TruncatedTensor p = tensor_mul(x, y);
  CHECK(p.coeff(Word{1, 1}) == doctest::Approx(2.0 * 0.5).epsilon(1e-15));
  CHECK(p.coeff(Word{1, 2}) == doctest::Approx(2.0 * 3.0).epsilon(1e-15));
  CHECK(p.coeff(Word{2, 1}) == doctest::Approx(-1.0 * 0.5).epsilon(1e-15));
  CHECK(p.coeff(Word{2, 2}) == doctest::Approx(-1.0 * 3.0).epsilon(1e-15));
  CHECK(p.coeff(Word{1}) == doctest::Approx(2.5));
}

TEST_CASE("tensor_mul: matches word-indexed naive convolution") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const TruncatedTensor a = random_tensor(2, 3, rng, rep % 2 == 0);
    const TruncatedTensor b = random_tensor(2, 3, rng, rep % 2 == 1);
    CHECK(max_abs_diff(tensor_mul(a, b), naive_mul(a, b)) <= 1e-14);
  }
}

TEST_CASE("tensor_mul: dimension mismatch is an error") {
  const TruncatedTensor a(2, 3);
  const TruncatedTensor b(3, 3);
  const TruncatedTensor c(2, 2);
  CHECK_THROWS(tensor_mul(a, b));
  CHECK_THROWS(tensor_mul(a, c));
}

TEST_CASE("tensor_mul: associative up to truncation") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 5; ++rep) {
    const TruncatedTensor a = random_tensor(3, 3, rng, false);
    const TruncatedTensor b = random_tensor(3, 3, rng, true);
    const TruncatedTensor c = random_tensor(3, 3, rng, false);
    const TruncatedTensor left = tensor_mul(tensor_mul(a, b), c);
    const TruncatedTensor right = tensor_mul(a, tensor_mul(b, c));
    CHECK(max_abs_diff(left, right) <= 1e-12);
  }
}

TEST_CASE("tensor_exp: identities") {
  const TruncatedTensor zero(2, 3);
  CHECK(max_abs_diff(tensor_exp(zero), TruncatedTensor::unit(2, 3)) == 0.0);

  TruncatedTensor v(2, 2);
  v.set_coeff(Word{1}, 0.7);
  v.set_coeff(Word{2}, -0.2);
  const TruncatedTensor e = tensor_exp(v);
  CHECK(e.scalar() == 1.0);
  CHECK(e.coeff(Word{1}) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(e.coeff(Word{1, 2}) == doctest::Approx(0.7 * -0.2 / 2.0).epsilon(1e-15));
  CHECK(e.coeff(Word{2, 2}) == doctest::Approx(0.2 * 0.2 / 2.0).epsilon(1e-15));

  TruncatedTensor bad = TruncatedTensor::unit(2, 2);
  CHECK_THROWS(tensor_exp(bad));
}

TEST_CASE("group_inverse: identities and round trips") {
  const TruncatedTensor one = TruncatedTensor::unit(3, 3);
  CHECK(max_abs_diff(group_inverse(one), one) == 0.0);

  // inverse(exp(v)) = exp(-v) on the one-parameter group.
  std::mt19937_64 rng(17);
  TruncatedTensor v = random_tensor(3, 3, rng, false);
  TruncatedTensor neg_v = v;
  neg_v *= -1.0;
  CHECK(max_abs_diff(group_inverse(tensor_exp(v)), tensor_exp(neg_v)) <= 1e-12);

  for (int rep = 0; rep < 5; ++rep) {
    const TruncatedTensor g = tensor_exp(random_tensor(3, 3, rng, false));
    CHECK(max_abs_diff(tensor_mul(g, group_inverse(g)), one) <= 1e-12);
    CHECK(max_abs_diff(tensor_mul(group_inverse(g), g), one) <= 1e-12);
  }

  TruncatedTensor not_group(3, 3);
  CHECK_THROWS(group_inverse(not_group));
}

TEST_CASE("word labels") {
  CHECK(word_label(Word{}, 3) == "∅");
  CHECK(word_label(Word{1}, 3) == "1");
  CHECK(word_label(Word{1, 2}, 3) == "12");
  CHECK(word_label(Word{3, 11, 2}, 12) == "3.11.2");
}
