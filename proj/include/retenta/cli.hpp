#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace retenta {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

struct ClusteringBench {
    double kmeans_ms = 0.0;
    double agglomerative_ms = 0.0;
    double kmeans_wcss = 0.0;
    double agglomerative_wcss = 0.0;
};

// Times kmeans_best_of against agglomerative_cluster on the same planted
// blobs, in this process.
ClusteringBench bench_clustering(std::size_t n, std::size_t d, std::size_t k, std::uint64_t seed,
                                 std::size_t restarts);

// Entry point of the retenta tool. args[0] is the program name.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace retenta
