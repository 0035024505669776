// Test-side oracles, independent of the library implementations they check.
// Shared by the unit tests and the acceptance suite; never linked into the
// shipped library.
#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "lgan/tensor/tensor.hpp"

namespace oracle {

// ---- Damerau-Levenshtein via breadth-first edit-script search ----
//
// States are whole sequences packed into a u64 (4 bits per symbol, length in
// the top bits), edited by explicit insert/delete/substitute/adjacent-
// transpose moves. Intermediate lengths are capped at max(len)+2; optimal
// scripts between short sequences never need longer intermediates.

namespace detail {

constexpr int kMaxLen = 14;

inline uint64_t pack(const std::vector<int64_t>& s) {
  uint64_t v = static_cast<uint64_t>(s.size()) << 56;
  for (size_t i = 0; i < s.size(); ++i) v |= static_cast<uint64_t>(s[i] & 0xf) << (i * 4);
  return v;
}

inline int unpack_len(uint64_t v) { return static_cast<int>(v >> 56); }
inline int sym(uint64_t v, int i) { return static_cast<int>((v >> (i * 4)) & 0xf); }

inline uint64_t set_len(uint64_t body, int len) {
  return (body & 0x00ffffffffffffffULL) | (static_cast<uint64_t>(len) << 56);
}

template <typename F>
void for_each_neighbor(uint64_t v, int alphabet, int max_len, F&& emit) {
  const int len = unpack_len(v);
  // Deletions.
  for (int i = 0; i < len; ++i) {
    uint64_t lo = v & ((1ULL << (i * 4)) - 1);
    uint64_t hi = (v & 0x00ffffffffffffffULL) >> ((i + 1) * 4) << (i * 4);
    emit(set_len(lo | hi, len - 1));
  }
  // Insertions.
  if (len < max_len && len + 1 <= kMaxLen) {
    for (int i = 0; i <= len; ++i) {
      uint64_t lo = v & ((1ULL << (i * 4)) - 1);
      uint64_t hi = ((v & 0x00ffffffffffffffULL) >> (i * 4)) << ((i + 1) * 4);
      for (int c = 0; c < alphabet; ++c) {
        emit(set_len(lo | hi | (static_cast<uint64_t>(c) << (i * 4)), len + 1));
      }
    }
  }
  // Substitutions.
  for (int i = 0; i < len; ++i) {
    const int cur = sym(v, i);
    for (int c = 0; c < alphabet; ++c) {
      if (c == cur) continue;
      emit((v & ~(0xfULL << (i * 4))) | (static_cast<uint64_t>(c) << (i * 4)));
    }
  }
  // Adjacent transpositions (skip no-ops).
  for (int i = 0; i + 1 < len; ++i) {
    const uint64_t a = (v >> (i * 4)) & 0xf;
    const uint64_t b = (v >> ((i + 1) * 4)) & 0xf;
    if (a == b) continue;
    uint64_t w = v & ~(0xffULL << (i * 4));
    emit(w | (b << (i * 4)) | (a << ((i + 1) * 4)));
  }
}

struct Ball {
  std::unordered_map<uint64_t, int> dist;
  std::vector<uint64_t> frontier;
  int level = 0;
};

inline void expand(Ball& ball, int alphabet, int max_len) {
  std::vector<uint64_t> next;
  for (uint64_t v : ball.frontier) {
    for_each_neighbor(v, alphabet, max_len, [&](uint64_t w) {
      if (ball.dist.emplace(w, ball.level + 1).second) next.push_back(w);
    });
  }
  ball.frontier = std::move(next);
  ++ball.level;
}

}  // namespace detail

// Exact distance for one pair via bidirectional search.
inline int64_t dl_bfs_pair(const std::vector<int64_t>& a, const std::vector<int64_t>& b,
                           int alphabet) {
  if (a == b) return 0;
  const int max_len =
      static_cast<int>(std::max(a.size(), b.size())) + 2;
  if (max_len > detail::kMaxLen) throw std::invalid_argument("dl_bfs_pair: sequence too long");
  detail::Ball A, B;
  A.dist[detail::pack(a)] = 0;
  A.frontier = {detail::pack(a)};
  B.dist[detail::pack(b)] = 0;
  B.frontier = {detail::pack(b)};
  int64_t best = std::numeric_limits<int64_t>::max();
  while (A.level + B.level < best && (!A.frontier.empty() || !B.frontier.empty())) {
    detail::Ball& grow = (A.frontier.size() <= B.frontier.size() && !A.frontier.empty()) ||
                                 B.frontier.empty()
                             ? A
                             : B;
    detail::Ball& other = &grow == &A ? B : A;
    detail::expand(grow, alphabet, max_len);
    for (uint64_t v : grow.frontier) {
      auto it = other.dist.find(v);
      if (it != other.dist.end()) {
        best = std::min<int64_t>(best, grow.level + it->second);
      }
    }
    // The start of one ball may sit inside the other after one expansion.
    auto hitA = B.dist.find(detail::pack(a));
    if (hitA != B.dist.end()) best = std::min<int64_t>(best, hitA->second);
    auto hitB = A.dist.find(detail::pack(b));
    if (hitB != A.dist.end()) best = std::min<int64_t>(best, hitB->second);
  }
  return best;
}

// Single-source BFS ball to the given depth; returns packed-state -> dist.
// One call yields oracle distances from `src` to every sequence within
// depth edits, for exhaustive sweeps over small alphabets.
inline std::unordered_map<uint64_t, int> dl_bfs_ball(const std::vector<int64_t>& src, int alphabet,
                                                     int depth, int max_len) {
  detail::Ball ball;
  ball.dist[detail::pack(src)] = 0;
  ball.frontier = {detail::pack(src)};
  while (ball.level < depth && !ball.frontier.empty()) detail::expand(ball, alphabet, max_len);
  return ball.dist;
}

inline uint64_t dl_pack(const std::vector<int64_t>& s) { return detail::pack(s); }

// ---- Per-pixel brute-force IoU ----

struct BruteIou {
  int64_t inter = 0, uni = 0;
};

inline BruteIou brute_counts(const std::vector<float>& pred, const std::vector<float>& gt,
                             const std::vector<float>* region) {
  BruteIou c;
  for (size_t p = 0; p < gt.size(); ++p) {
    if (region && (*region)[p] == 0.f) continue;
    const bool gp = gt[p] != 0.f;
    const bool pp = p < pred.size() && pred[p] != 0.f;
    if (gp && pp) ++c.inter;
    if (gp || pp) ++c.uni;
  }
  return c;
}

// ---- Average precision by O(n^2) rank counting (no sort) ----

inline double ap_rank_count(const std::vector<double>& scores, const std::vector<int>& labels) {
  const size_t n = scores.size();
  std::vector<size_t> rank(n);
  for (size_t i = 0; i < n; ++i) {
    size_t r = 1;
    for (size_t j = 0; j < n; ++j) {
      if (scores[j] > scores[i]) ++r;
      if (j < i && scores[j] == scores[i]) ++r;
    }
    rank[i] = r;
  }
  std::vector<int> label_at_rank(n + 1, 0);
  for (size_t i = 0; i < n; ++i) label_at_rank[rank[i]] = labels[i];
  int64_t npos = 0;
  for (int l : labels) npos += l != 0;
  double sum = 0.0;
  int64_t tp = 0;
  for (size_t r = 1; r <= n; ++r) {
    if (label_at_rank[r]) {
      ++tp;
      sum += static_cast<double>(tp) / static_cast<double>(r);
    }
  }
  return sum / static_cast<double>(npos);
}

}  // namespace oracle
