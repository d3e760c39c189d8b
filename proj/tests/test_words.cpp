#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <string>

#include "oracles.hpp"

using namespace hypcomp;

TEST_CASE("letter codes, chars and inverses") {
  const int k = 3;
  REQUIRE(letter_char(0, k) == 'a');
  REQUIRE(letter_char(2, k) == 'c');
  REQUIRE(letter_char(3, k) == 'A');
  REQUIRE(letter_char(5, k) == 'C');
  for (int c = 0; c < 2 * k; ++c) {
    LetterCode lc = static_cast<LetterCode>(c);
    REQUIRE(letter_inverse(letter_inverse(lc, k), k) == lc);
    REQUIRE(letter_from_char(letter_char(lc, k), k) == lc);
    Letter l = Letter::from_code(lc, k);
    REQUIRE(l.code(k) == lc);
    REQUIRE(l.inverse().code(k) == letter_inverse(lc, k));
  }
  REQUIRE_THROWS_AS(letter_from_char('d', 3), ParseError);
  REQUIRE_THROWS_AS(letter_from_char('?', 3), ParseError);
}

TEST_CASE("parse and to_string round-trip") {
  const int k = 2;
  REQUIRE(parse_word("abA", k).to_string(k) == "abA");
  REQUIRE(parse_word("", k).empty());
  REQUIRE(parse_word("e", k).empty());  // identity shorthand for small ranks
  REQUIRE(parse_word("e", 4).empty());
  // at rank 5, 'e' is the fifth generator
  REQUIRE(parse_word("e", 5).to_string(5) == "e");
  REQUIRE_THROWS_AS(parse_word("aA", k), ParseError);   // not reduced
  REQUIRE_THROWS_AS(parse_word("abBA", k), ParseError); // not reduced
  REQUIRE_THROWS_AS(parse_word("ac", 2), ParseError);   // letter out of range
  REQUIRE_THROWS_AS(parse_word("a?b", 2), ParseError);  // bad char
  REQUIRE(parse_word("a b", 2) == parse_word("ab", 2)); // spaces are ignored
}

TEST_CASE("free reduction matches the string oracle") {
  const int k = 2;
  REQUIRE(reduce_concat(parse_word("ab", k), parse_word("BA", k), k).empty());
  REQUIRE(reduce_concat(parse_word("ab", k), parse_word("ba", k), k)
              .to_string(k) == "abba");
  REQUIRE(reduce_concat(parse_word("abA", k), parse_word("abb", k), k)
              .to_string(k) == "abbb");

  oracle::Rng rng(12345);
  for (int trial = 0; trial < 300; ++trial) {
    int kk = 2 + static_cast<int>(rng.next(3));
    ReducedWord u = oracle::random_word(rng, kk, rng.next(9));
    ReducedWord v = oracle::random_word(rng, kk, rng.next(9));
    std::string su = u.to_string(kk), sv = v.to_string(kk);
    REQUIRE(reduce_concat(u, v, kk).to_string(kk) ==
            oracle::reduce_string(su + sv));
    REQUIRE(is_reduced(reduce_concat(u, v, kk), kk));
    REQUIRE(inverse(u, kk).to_string(kk) == oracle::invert_string(su));
    REQUIRE(reduce_concat(u, inverse(u, kk), kk).empty());
  }
}

TEST_CASE("associativity on random triples") {
  oracle::Rng rng(777);
  const int k = 2;
  for (int trial = 0; trial < 200; ++trial) {
    ReducedWord a = oracle::random_word(rng, k, rng.next(7));
    ReducedWord b = oracle::random_word(rng, k, rng.next(7));
    ReducedWord c = oracle::random_word(rng, k, rng.next(7));
    ReducedWord lhs = reduce_concat(reduce_concat(a, b, k), c, k);
    ReducedWord rhs = reduce_concat(a, reduce_concat(b, c, k), k);
    REQUIRE(lhs == rhs);
  }
}

TEST_CASE("lexicographic order follows letter codes") {
  const int k = 2;
  // code order is a < b < A < B — not ASCII order
  REQUIRE(parse_word("ab", k) < parse_word("aB", k));
  REQUIRE(parse_word("b", k) < parse_word("A", k));
  REQUIRE(parse_word("a", k) < parse_word("ab", k));  // prefix first

  std::vector<std::string> strings;
  oracle::enumerate_strings(k, 3, &strings);
  std::vector<ReducedWord> words = words_of_length(k, 3);
  REQUIRE(words.size() == strings.size());
  for (std::size_t i = 0; i < words.size(); ++i)
    REQUIRE(words[i].to_string(k) == strings[i]);
  REQUIRE(std::is_sorted(words.begin(), words.end()));
}

TEST_CASE("sphere and ball enumeration counts") {
  for (int k = 2; k <= 3; ++k) {
    std::size_t q = 2 * static_cast<std::size_t>(k);
    REQUIRE(words_of_length(k, 0).size() == 1);
    std::size_t expected = q;
    for (std::size_t n = 1; n <= 5; ++n) {
      auto sphere = words_of_length(k, n);
      REQUIRE(sphere.size() == expected);
      for (const ReducedWord& w : sphere) {
        REQUIRE(w.size() == n);
        REQUIRE(is_reduced(w, k));
      }
      expected *= q - 1;
    }
    auto ball = words_up_to(k, 3, true);
    auto ball_no_id = words_up_to(k, 3);
    REQUIRE(ball.size() == ball_no_id.size() + 1);
    std::set<std::string> seen;
    for (const ReducedWord& w : ball) seen.insert(w.to_string(k));
    REQUIRE(seen.size() == ball.size());  // no duplicates
    REQUIRE(ball.size() == 1 + q + q * (q - 1) + q * (q - 1) * (q - 1));
  }
}

TEST_CASE("prefix predicates and cylinder relations") {
  const int k = 2;
  ReducedWord ab = parse_word("ab", k);
  ReducedWord abb = parse_word("abb", k);
  ReducedWord ba = parse_word("ba", k);
  REQUIRE(is_prefix(ab, abb));
  REQUIRE(!is_prefix(abb, ab));
  REQUIRE(is_prefix(ReducedWord{}, ba));
  REQUIRE(common_prefix_letters(abb, ab) == 2);
  REQUIRE(common_prefix_letters(ab, ba) == 0);

  Cylinder whole;  // empty prefix
  REQUIRE(whole.whole_boundary());
  REQUIRE(Cylinder{ab}.depth() == 2);
  REQUIRE(cylinders_nested(Cylinder{ab}, Cylinder{abb}));
  REQUIRE(cylinders_nested(Cylinder{abb}, Cylinder{ab}));
  REQUIRE(!cylinders_disjoint(Cylinder{abb}, Cylinder{ab}));
  REQUIRE(cylinders_disjoint(Cylinder{ab}, Cylinder{ba}));
  REQUIRE(cylinders_nested(whole, Cylinder{ba}));

  // trichotomy on a brute-force sample: nested xor disjoint xor equal-overlap
  auto all = words_up_to(k, 3, true);
  for (const ReducedWord& u : all)
    for (const ReducedWord& v : all) {
      bool nested = cylinders_nested(Cylinder{u}, Cylinder{v});
      bool disjoint = cylinders_disjoint(Cylinder{u}, Cylinder{v});
      bool prefix_rel = is_prefix(u, v) || is_prefix(v, u);
      REQUIRE(nested == prefix_rel);
      REQUIRE(disjoint == !prefix_rel);
    }
}
