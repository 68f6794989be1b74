#include <doctest.h>

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "postscan/bleu.hpp"

using namespace postscan::bleu;

namespace {

Tokens words(std::initializer_list<const char*> w) { return Tokens(w.begin(), w.end()); }

Tokens random_tokens(std::mt19937_64& rng, int min_len, int max_len, int vocab) {
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<int> tok(0, vocab - 1);
  Tokens t;
  for (int i = 0, n = len(rng); i < n; ++i) t.push_back("t" + std::to_string(tok(rng)));
  return t;
}

std::vector<Pair> random_pairs(std::mt19937_64& rng, std::size_t n) {
  std::vector<Pair> pairs;
  const int vocab = 2 + static_cast<int>(rng() % 6);
  for (std::size_t i = 0; i < n; ++i) {
    Pair p;
    p.candidate = random_tokens(rng, 0, 8, vocab);
    for (int r = 0, k = 1 + static_cast<int>(rng() % 4); r < k; ++r) p.references.push_back(random_tokens(rng, 1, 8, vocab));
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<std::pair<oracle::Doc, std::vector<oracle::Doc>>> to_oracle(const std::vector<Pair>& pairs) {
  std::vector<std::pair<oracle::Doc, std::vector<oracle::Doc>>> out;
  for (const auto& p : pairs) out.emplace_back(p.candidate, p.references);
  return out;
}

}  // namespace

TEST_CASE("perfect match scores 1") {
  const auto t = words({"a", "person", "with", "two", "guns"});
  const std::vector<Tokens> refs{t};
  const auto r = sentence_bleu(t, refs);
  CHECK(r.bleu1 == 1.0);
  REQUIRE(r.bleu2);
  CHECK(*r.bleu2 == 1.0);
  CHECK(r.brevity_penalty == 1.0);
}

TEST_CASE("clipping: the the the against the cat") {
  const std::vector<Tokens> refs{words({"the", "cat"})};
  const auto r = sentence_bleu(words({"the", "the", "the"}), refs);
  CHECK(r.clipped_matches[0] == 1);
  CHECK(r.candidate_ngrams[0] == 3);
  CHECK(r.brevity_penalty == 1.0);
  CHECK(r.bleu1 == 1.0 / 3.0);
  CHECK(*r.bleu2 == 0.0);
}

TEST_CASE("brevity penalty: the cat against the cat sat") {
  const std::vector<Tokens> refs{words({"the", "cat", "sat"})};
  const auto r = sentence_bleu(words({"the", "cat"}), refs);
  CHECK(r.precisions[0] == 1.0);
  CHECK(r.brevity_penalty == std::exp(1.0 - 3.0 / 2.0));
  CHECK(r.bleu1 == std::exp(-0.5));
  CHECK(r.bleu1 == doctest::Approx(0.6065).epsilon(1e-4));
  CHECK(*r.bleu2 == std::exp(-0.5));
}

TEST_CASE("closest reference length, ties toward the shorter") {
  const std::vector<Tokens> refs{words({"a", "b"}), words({"a", "b", "c", "d"})};
  const auto counts = count_pair(words({"a", "b", "c"}), refs);
  CHECK(counts.reference_length == 2);
  const std::vector<Tokens> refs2{words({"a", "b", "c", "d", "e"}), words({"a"})};
  CHECK(count_pair(words({"a", "b"}), refs2).reference_length == 1);
}

TEST_CASE("empty candidate and error cases") {
  const std::vector<Tokens> refs{words({"a"})};
  const auto r = sentence_bleu(Tokens{}, refs);
  CHECK(r.bleu1 == 0.0);
  CHECK(*r.bleu2 == 0.0);
  CHECK(r.brevity_penalty == 0.0);
  CHECK_THROWS_AS(sentence_bleu(words({"a"}), std::vector<Tokens>{}), std::invalid_argument);
  CHECK_THROWS_AS(sentence_bleu(words({"a"}), std::vector<Tokens>{Tokens{}}), std::invalid_argument);
  CHECK_THROWS_AS(corpus_bleu(std::vector<Pair>{}), std::invalid_argument);
  CHECK_THROWS_AS(sentence_bleu(words({"a"}), refs, {3, false}), std::invalid_argument);
}

TEST_CASE("order 1 omits BLEU-2") {
  const std::vector<Tokens> refs{words({"a", "b"})};
  const auto r = sentence_bleu(words({"a", "b"}), refs, {1, false});
  CHECK_FALSE(r.bleu2);
  CHECK(summary_line(r) == "BLEU-1 1.0000");
}

TEST_CASE("smoothing keeps a zero-match order from zeroing the score") {
  const std::vector<Tokens> refs{words({"a", "b"})};
  const auto plain = sentence_bleu(words({"b", "a"}), refs);
  const auto smooth = sentence_bleu(words({"b", "a"}), refs, {2, true});
  CHECK(*plain.bleu2 == 0.0);
  CHECK(*smooth.bleu2 > 0.0);
  CHECK(*smooth.bleu2 < 1e-4);
  CHECK(smooth.bleu1 == plain.bleu1);
}

TEST_CASE("corpus aggregation") {
  const Pair p{words({"the", "cat", "sat"}), {words({"the", "cat", "sat", "down"})}};
  const std::vector<Pair> one{p};
  const auto c = corpus_bleu(one);
  const auto s = sentence_bleu(p.candidate, p.references);
  CHECK(c.bleu1 == s.bleu1);
  CHECK(*c.bleu2 == *s.bleu2);

  const std::vector<Pair> disjoint{{words({"a", "b"}), {words({"c", "d"})}}, {words({"e"}), {words({"f"})}}};
  CHECK(corpus_bleu(disjoint).bleu1 == 0.0);

  CHECK(summary_line(corpus_bleu(std::vector<Pair>{{words({"x", "y"}), {words({"x", "y"})}}})) ==
        "BLEU-1 1.0000 BLEU-2 1.0000");
}

TEST_CASE("property: corpus BLEU equals the brute-force recount") {
  std::mt19937_64 rng(500);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pairs = random_pairs(rng, trial % 2 ? 10 : 1 + rng() % 12);
    const auto got = corpus_bleu(pairs);
    const auto want = oracle::corpus_bleu(to_oracle(pairs));
    CHECK(std::abs(got.bleu1 - want.bleu1) <= 1e-12);
    CHECK(std::abs(*got.bleu2 - want.bleu2) <= 1e-12);
    CHECK(static_cast<double>(got.clipped_matches[0]) == want.matches[0]);
    CHECK(static_cast<double>(got.clipped_matches[1]) == want.matches[1]);
    CHECK(static_cast<double>(got.candidate_length) == want.c);
    CHECK(static_cast<double>(got.reference_length) == want.r);
  }
}

TEST_CASE("property: ordering, permutation, duplicate references, self-match") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    auto pairs = random_pairs(rng, 1 + rng() % 10);
    const auto base = corpus_bleu(pairs);
    CHECK(base.bleu1 >= 0.0);
    CHECK(base.bleu1 <= 1.0);
    CHECK(*base.bleu2 >= 0.0);
    if (base.precisions[1] <= base.precisions[0]) CHECK(*base.bleu2 <= base.bleu1);
    if (base.candidate_length > 0) {
      CHECK(base.brevity_penalty > 0.0);
      CHECK(base.brevity_penalty <= 1.0);
    }

    auto shuffled = pairs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto perm = corpus_bleu(shuffled);
    CHECK(perm.bleu1 == base.bleu1);
    CHECK(*perm.bleu2 == *base.bleu2);

    auto dup = pairs;
    for (auto& p : dup) p.references.push_back(p.references[rng() % p.references.size()]);
    const auto d = corpus_bleu(dup);
    CHECK(d.bleu1 == base.bleu1);
    CHECK(*d.bleu2 == *base.bleu2);

    auto self = pairs;
    for (auto& p : self) p.candidate = p.references[rng() % p.references.size()];
    const auto s = corpus_bleu(self);
    CHECK(s.bleu1 == 1.0);
    CHECK(*s.bleu2 == (std::all_of(self.begin(), self.end(), [](const Pair& p) { return p.candidate.size() < 2; })
                           ? 0.0
                           : 1.0));
  }
}

// Bigram precision is not bounded by unigram precision, so BLEU-2 can exceed BLEU-1.
TEST_CASE("bigram precision can exceed unigram precision") {
  const std::vector<Tokens> refs{words({"a", "a", "a", "b", "a", "a"})};
  const auto s = sentence_bleu(words({"b", "b", "a", "b"}), refs);
  CHECK(s.precisions[0] == 0.5);
  CHECK(s.precisions[1] == 2.0 / 3.0);
  CHECK(*s.bleu2 > s.bleu1);

  const std::vector<Pair> pairs{{words({"x"}), {words({"y"})}}, {words({"a", "b"}), {words({"a", "b"})}}};
  const auto c = corpus_bleu(pairs);
  CHECK(c.precisions[0] == 2.0 / 3.0);
  CHECK(c.precisions[1] == 1.0);
  CHECK(*c.bleu2 > c.bleu1);
}

TEST_CASE("parallel corpus BLEU equals serial") {
  std::mt19937_64 rng(9);
  omp_set_num_threads(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pairs = random_pairs(rng, 300);
    for (bool smooth : {false, true}) {
      const auto a = corpus_bleu(pairs, {2, smooth});
      const auto b = corpus_bleu_serial(pairs, {2, smooth});
      CHECK(a.bleu1 == b.bleu1);
      CHECK(*a.bleu2 == *b.bleu2);
      CHECK(a.clipped_matches == b.clipped_matches);
      CHECK(to_json(a) == to_json(b));
    }
  }
}

TEST_CASE("sentence average and caption tokens") {
  const std::vector<Pair> pairs{{words({"a", "b"}), {words({"a", "b"})}}, {words({"c"}), {words({"d"})}}};
  const auto avg = average_sentence_bleu(pairs);
  CHECK(avg[0] == 0.5);
  CHECK(caption_tokens("Two guns, laying over a BLUE sheet.") ==
        words({"two", "guns", "laying", "over", "a", "blue", "sheet"}));
}
