#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace stackreg {

/// Frame indices from i to k inclusive; consecutive entries are one hop.
using Path = std::vector<int>;

/// Whether the registration between two frames may be used as a hop.
using HopFilter = std::function<bool(int, int)>;

/// Number of transitivity relations available for one element of an
/// N-frame matrix: one per nonempty subset of the other N-2 frames.
std::uint64_t candidate_path_count(int frame_count);

/// Up to max_paths paths of two or more hops from i to k, in preference order:
///   1. all intermediate frames strictly between i and k,
///   2. smallest maximum hop length |j2 - j1|,
///   3. fewest hops,
///   4. lexicographically smallest intermediate sequence.
/// Each path visits its intermediate frames in index order (ascending from
/// i to k; paths for i > k are the reverses of those for k > i). When
/// `usable` is given, only paths whose hops all pass it are returned.
/// Returns fewer paths when fewer exist.
std::vector<Path> select_paths(int i, int k, int frame_count, int max_paths,
                               const HopFilter& usable = {});

}  // namespace stackreg
