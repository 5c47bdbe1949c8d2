#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "surfmeas/errors.hpp"
#include "surfmeas/estimate.hpp"
#include "surfmeas/measure.hpp"
#include "surfmeas/parallel.hpp"

namespace surfmeas {

/// Rows per RNG substream. Block b of a batch is drawn from RandomStream(seed, b).
inline constexpr std::size_t kDefaultBlockRows = 4096;

/// i.i.d. draws from a ProductLaw, stored row-major.
struct SampleBatch {
    int m = 1;
    std::vector<double> weights;
    std::uint64_t seed = 0;
    std::size_t block_rows = kDefaultBlockRows;
    std::size_t count = 0;
    std::size_t dim = 0;
    std::vector<double> data;

    std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
    std::size_t blocks() const { return (count + block_rows - 1) / block_rows; }
    std::string shard_layout() const;
};

SampleBatch sample_product(const ProductLaw& law, std::size_t count, std::uint64_t seed,
                           std::size_t block_rows = kDefaultBlockRows);

/// Mean of fn(row) over the batch with its standard error. Blocks are reduced
/// in index order, so the result does not depend on the worker count.
template <class RowFn>
McEstimate batch_mean(const SampleBatch& batch, RowFn&& fn) {
    if (batch.count == 0) throw EmptyBatch();
    std::vector<MeanAccumulator> partial(batch.blocks());
    parallel_for_blocks(partial.size(), [&](std::size_t b) {
        const std::size_t lo = b * batch.block_rows;
        const std::size_t hi = std::min(batch.count, lo + batch.block_rows);
        MeanAccumulator acc;
        for (std::size_t i = lo; i < hi; ++i) acc.add(fn(batch.row(i)));
        partial[b] = acc;
    });
    MeanAccumulator total;
    for (const auto& p : partial) total.merge(p);
    return total.estimate(batch.seed);
}

/// Several means from one pass; fn returns std::array<double, K>.
template <std::size_t K, class RowFn>
std::array<McEstimate, K> batch_means(const SampleBatch& batch, RowFn&& fn) {
    if (batch.count == 0) throw EmptyBatch();
    std::vector<std::array<MeanAccumulator, K>> partial(batch.blocks());
    parallel_for_blocks(partial.size(), [&](std::size_t b) {
        const std::size_t lo = b * batch.block_rows;
        const std::size_t hi = std::min(batch.count, lo + batch.block_rows);
        std::array<MeanAccumulator, K> acc{};
        for (std::size_t i = lo; i < hi; ++i) {
            const std::array<double, K> v = fn(batch.row(i));
            for (std::size_t k = 0; k < K; ++k) acc[k].add(v[k]);
        }
        partial[b] = acc;
    });
    std::array<McEstimate, K> out{};
    for (std::size_t k = 0; k < K; ++k) {
        MeanAccumulator total;
        for (const auto& p : partial) total.merge(p[k]);
        out[k] = total.estimate(batch.seed);
    }
    return out;
}

// Binary layout (little-endian): "SMSB", u32 version, i32 m, u64 n, n x f64 mu,
// u64 seed, u64 count, u64 block_rows, then count*n f64 row-major.
inline constexpr std::uint32_t kBatchFormatVersion = 1;

void write_batch_binary(const SampleBatch& batch, std::ostream& out);
SampleBatch read_batch_binary(std::istream& in);
void write_batch_csv(const SampleBatch& batch, std::ostream& out);

}  // namespace surfmeas
