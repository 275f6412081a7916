#include "stackreg/paths.hpp"

#include "stackreg/error.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

namespace stackreg {

std::uint64_t candidate_path_count(int frame_count) {
  if (frame_count < 3) return 0;
  if (frame_count - 2 >= 64) return UINT64_MAX;
  return (std::uint64_t{1} << (frame_count - 2)) - 1;
}

namespace {

// Enumerates paths i -> s_1 < s_2 < ... < s_{m-1} -> k (i < k) whose hops
// are at most `max_hop` long, contain at least one hop of exactly
// `max_hop`, and whose intermediates are either all inside (i, k) or
// include at least one outside frame. Completion feasibility is tabulated
// once per max_hop so the depth-first search never enters a dead branch.
class PathSearch {
 public:
  PathSearch(int i, int k, int n, bool inside_only, const HopFilter& usable)
      : i_(i), k_(k), n_(n), inside_only_(inside_only), usable_(usable) {}

  void set_max_hop(int max_hop) {
    max_hop_ = max_hop;
    const int max_q = n_;
    table_.assign(static_cast<std::size_t>((max_q + 1) * n_ * 4), 0);
    for (int q = 1; q <= max_q; ++q) {
      for (int cur = n_ - 1; cur >= 0; --cur) {
        if (!allowed(cur)) continue;
        for (int flags = 0; flags < 4; ++flags) {
          table_[index(q, cur, flags)] = compute(q, cur, flags) ? 1 : 0;
        }
      }
    }
  }

  // Appends paths with exactly `hops` hops in lexicographic order.
  void collect(int hops, std::size_t limit, std::vector<Path>& out) {
    if (hops < 2) return;
    Path path{i_};
    // First intermediate may lie anywhere (below i only for outside paths).
    for (int s = 0; s < n_ && out.size() < limit; ++s) {
      if (!allowed(s)) continue;
      const int len = std::abs(s - i_);
      if (len > max_hop_ || !hop_ok(i_, s)) continue;
      const int flags = flag_bits(len == max_hop_, outside(s));
      if (!feasible(hops - 1, s, flags)) continue;
      path.push_back(s);
      extend(s, hops - 1, flags, limit, path, out);
      path.pop_back();
    }
  }

 private:
  bool outside(int v) const { return v < i_ || v > k_; }
  bool allowed(int v) const {
    if (v == i_ || v == k_ || v < 0 || v >= n_) return false;
    return !inside_only_ || !outside(v);
  }
  bool hop_ok(int a, int b) const { return !usable_ || usable_(a, b); }
  static int flag_bits(bool has_max, bool has_outside) {
    return (has_max ? 1 : 0) | (has_outside ? 2 : 0);
  }
  std::size_t index(int q, int cur, int flags) const {
    return (static_cast<std::size_t>(q) * n_ + cur) * 4 + flags;
  }
  bool feasible(int q, int cur, int flags) const { return table_[index(q, cur, flags)] != 0; }

  bool satisfied(int flags) const {
    return (flags & 1) && (inside_only_ || (flags & 2));
  }

  bool compute(int q, int cur, int flags) const {
    if (q == 1) {
      const int len = std::abs(k_ - cur);
      if (len > max_hop_ || !hop_ok(cur, k_)) return false;
      return satisfied(flags | flag_bits(len == max_hop_, false));
    }
    for (int e = cur + 1; e <= std::min(n_ - 1, cur + max_hop_); ++e) {
      if (!allowed(e) || !hop_ok(cur, e)) continue;
      const int next = flags | flag_bits(e - cur == max_hop_, outside(e));
      if (table_[index(q - 1, e, next)]) return true;
    }
    return false;
  }

  void extend(int cur, int q, int flags, std::size_t limit, Path& path, std::vector<Path>& out) {
    if (out.size() >= limit) return;
    if (q == 1) {
      path.push_back(k_);
      out.push_back(path);
      path.pop_back();
      return;
    }
    for (int e = cur + 1; e <= std::min(n_ - 1, cur + max_hop_) && out.size() < limit; ++e) {
      if (!allowed(e) || !hop_ok(cur, e)) continue;
      const int next = flags | flag_bits(e - cur == max_hop_, outside(e));
      if (!feasible(q - 1, e, next)) continue;
      path.push_back(e);
      extend(e, q - 1, next, limit, path, out);
      path.pop_back();
    }
  }

  int i_, k_, n_;
  bool inside_only_;
  const HopFilter& usable_;
  int max_hop_ = 1;
  std::vector<std::uint8_t> table_;
};

}  // namespace

std::vector<Path> select_paths(int i, int k, int frame_count, int max_paths, const HopFilter& usable) {
  if (frame_count < 2 || i < 0 || k < 0 || i >= frame_count || k >= frame_count) {
    throw Error(ErrorCode::invalid_argument, "path endpoints out of range");
  }
  if (i == k) throw Error(ErrorCode::invalid_argument, "path endpoints must differ");
  if (max_paths < 1) throw Error(ErrorCode::invalid_argument, "max_paths must be at least 1");

  if (i > k) {
    HopFilter reversed;
    if (usable) reversed = [&usable](int a, int b) { return usable(b, a); };
    auto paths = select_paths(k, i, frame_count, max_paths, reversed);
    for (auto& p : paths) std::reverse(p.begin(), p.end());
    return paths;
  }

  const auto limit = static_cast<std::size_t>(max_paths);
  std::vector<Path> out;
  const int span = k - i;
  if (span >= 2) {
    PathSearch search(i, k, frame_count, true, usable);
    for (int h = 1; h < span && out.size() < limit; ++h) {
      search.set_max_hop(h);
      for (int hops = std::max(2, (span + h - 1) / h); hops <= span && out.size() < limit; ++hops) {
        search.collect(hops, limit, out);
      }
    }
  }
  if (out.size() < limit && frame_count > span + 1) {
    PathSearch search(i, k, frame_count, false, usable);
    for (int h = 1; h < frame_count && out.size() < limit; ++h) {
      search.set_max_hop(h);
      for (int hops = 2; hops < frame_count && out.size() < limit; ++hops) {
        search.collect(hops, limit, out);
      }
    }
  }
  return out;
}

}  // namespace stackreg
