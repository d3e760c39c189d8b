#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypcomp/errors.hpp"

namespace hypcomp {

/// Directed letters of the rank-k free group are coded 0..2k-1:
/// code i in [0,k) is the i-th generator, code k+i its inverse.
/// The printable alphabet is 'a'+i for generators and 'A'+i for inverses,
/// so for k=2 the letters in code order are a, b, A, B.
using LetterCode = std::uint8_t;

/// A letter presented as (generator index, sign). sign is +1 for a generator
/// and -1 for its inverse.
struct Letter {
  int index = 0;
  int sign = +1;

  static Letter from_code(LetterCode c, int k) {
    return c < k ? Letter{static_cast<int>(c), +1}
                 : Letter{static_cast<int>(c) - k, -1};
  }
  LetterCode code(int k) const {
    return static_cast<LetterCode>(sign > 0 ? index : index + k);
  }
  Letter inverse() const { return Letter{index, -sign}; }
  bool cancels(const Letter& o) const {
    return index == o.index && sign == -o.sign;
  }
};

inline LetterCode letter_inverse(LetterCode c, int k) {
  return static_cast<LetterCode>(c < k ? c + k : c - k);
}

inline int letter_index(LetterCode c, int k) { return c < k ? c : c - k; }

inline char letter_char(LetterCode c, int k) {
  return c < k ? static_cast<char>('a' + c) : static_cast<char>('A' + (c - k));
}

inline LetterCode letter_from_char(char ch, int k) {
  if (ch >= 'a' && ch < 'a' + k) return static_cast<LetterCode>(ch - 'a');
  if (ch >= 'A' && ch < 'A' + k)
    return static_cast<LetterCode>(k + (ch - 'A'));
  throw ParseError(std::string("invalid letter '") + ch + "' for rank " +
                   std::to_string(k));
}

/// A freely reduced word over the 2k directed letters. The empty word is the
/// group identity and doubles as the basepoint of the tree. Words serve both
/// as group elements and as cylinder prefixes.
struct ReducedWord {
  std::vector<LetterCode> letters;

  ReducedWord() = default;
  explicit ReducedWord(std::vector<LetterCode> ls) : letters(std::move(ls)) {}

  std::size_t size() const { return letters.size(); }
  bool empty() const { return letters.empty(); }
  LetterCode front() const { return letters.front(); }
  LetterCode back() const { return letters.back(); }

  bool operator==(const ReducedWord& o) const { return letters == o.letters; }
  bool operator!=(const ReducedWord& o) const { return letters != o.letters; }
  /// Lexicographic order in letter-code order (a < b < ... < A < B < ...).
  bool operator<(const ReducedWord& o) const { return letters < o.letters; }

  std::string to_string(int k) const {
    std::string s;
    s.reserve(letters.size());
    for (LetterCode c : letters) s.push_back(letter_char(c, k));
    return s;
  }
};

inline bool is_reduced(const ReducedWord& w, int k) {
  for (std::size_t i = 0; i + 1 < w.letters.size(); ++i)
    if (w.letters[i + 1] == letter_inverse(w.letters[i], k)) return false;
  for (LetterCode c : w.letters)
    if (c >= 2 * k) return false;
  return true;
}

/// Parse a word from its printable form. The empty string is the identity;
/// "e" is accepted as the identity as long as 'e' is not itself a generator
/// letter (k <= 4).
inline ReducedWord parse_word(const std::string& s, int k) {
  if (s.empty() || (s == "e" && k <= 4)) return ReducedWord{};
  ReducedWord w;
  w.letters.reserve(s.size());
  for (char ch : s) {
    if (ch == ' ') continue;
    w.letters.push_back(letter_from_char(ch, k));
  }
  if (!is_reduced(w, k))
    throw ParseError("word '" + s + "' is not freely reduced");
  return w;
}

/// Free reduction of the concatenation u*v of two already reduced words.
inline ReducedWord reduce_concat(const ReducedWord& u, const ReducedWord& v,
                                 int k) {
  ReducedWord out = u;
  for (LetterCode c : v.letters) {
    if (!out.letters.empty() &&
        out.letters.back() == letter_inverse(c, k)) {
      out.letters.pop_back();
    } else {
      out.letters.push_back(c);
    }
  }
  return out;
}

inline ReducedWord inverse(const ReducedWord& w, int k) {
  ReducedWord out;
  out.letters.reserve(w.letters.size());
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it)
    out.letters.push_back(letter_inverse(*it, k));
  return out;
}

/// Letter-length of the longest common prefix of two words.
inline std::size_t common_prefix_letters(const ReducedWord& u,
                                         const ReducedWord& v) {
  std::size_t j = 0;
  while (j < u.size() && j < v.size() && u.letters[j] == v.letters[j]) ++j;
  return j;
}

/// True if p is a (not necessarily proper) prefix of w.
inline bool is_prefix(const ReducedWord& p, const ReducedWord& w) {
  return p.size() <= w.size() && common_prefix_letters(p, w) == p.size();
}

/// A boundary cylinder: the set of infinite reduced words extending `prefix`.
/// The empty prefix is the whole boundary.
struct Cylinder {
  ReducedWord prefix;

  Cylinder() = default;
  explicit Cylinder(ReducedWord p) : prefix(std::move(p)) {}

  std::size_t depth() const { return prefix.size(); }
  bool whole_boundary() const { return prefix.empty(); }
  bool operator==(const Cylinder& o) const { return prefix == o.prefix; }
  bool operator<(const Cylinder& o) const { return prefix < o.prefix; }
};

/// Disjointness / nesting of cylinders is decided by prefix comparison:
/// they are nested iff one prefix extends the other, disjoint otherwise.
inline bool cylinders_nested(const Cylinder& v, const Cylinder& w) {
  return is_prefix(v.prefix, w.prefix) || is_prefix(w.prefix, v.prefix);
}

inline bool cylinders_disjoint(const Cylinder& v, const Cylinder& w) {
  return !cylinders_nested(v, w);
}

/// Enumerate all reduced words of letter-length exactly n, in lexicographic
/// order of letter codes.
inline std::vector<ReducedWord> words_of_length(int k, std::size_t n) {
  std::vector<ReducedWord> cur{ReducedWord{}};
  for (std::size_t step = 0; step < n; ++step) {
    std::vector<ReducedWord> next;
    next.reserve(cur.size() * (2 * k - 1));
    for (const ReducedWord& w : cur) {
      for (int c = 0; c < 2 * k; ++c) {
        if (!w.empty() &&
            static_cast<LetterCode>(c) == letter_inverse(w.back(), k))
          continue;
        ReducedWord e = w;
        e.letters.push_back(static_cast<LetterCode>(c));
        next.push_back(std::move(e));
      }
    }
    cur = std::move(next);
  }
  return cur;
}

/// Enumerate all reduced words with letter-length in [1, maxlen] (plus the
/// identity when include_identity), lexicographic within each length.
inline std::vector<ReducedWord> words_up_to(int k, std::size_t maxlen,
                                            bool include_identity = false) {
  std::vector<ReducedWord> out;
  if (include_identity) out.push_back(ReducedWord{});
  for (std::size_t n = 1; n <= maxlen; ++n) {
    auto layer = words_of_length(k, n);
    out.insert(out.end(), layer.begin(), layer.end());
  }
  return out;
}

}  // namespace hypcomp
