#include "surfmeas/sampler.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>

#include "surfmeas/errors.hpp"

namespace surfmeas {

static_assert(std::endian::native == std::endian::little, "batch files are written in host order");

std::string SampleBatch::shard_layout() const {
    return "xoshiro256ss(seed, block) blocks of " + std::to_string(block_rows) + " rows";
}

SampleBatch sample_product(const ProductLaw& law, std::size_t count, std::uint64_t seed, std::size_t block_rows) {
    if (count == 0) throw EmptyBatch();
    if (block_rows == 0) throw PreconditionError("block_rows must be >= 1");
    SampleBatch batch;
    batch.m = law.m();
    batch.weights = law.weights();
    batch.seed = seed;
    batch.block_rows = block_rows;
    batch.count = count;
    batch.dim = law.dim();
    batch.data.resize(count * batch.dim);

    std::vector<OneDimLaw> coords;
    for (std::size_t h = 0; h < law.dim(); ++h) coords.push_back(law.coordinate(h));

    parallel_for_blocks(batch.blocks(), [&](std::size_t b) {
        RandomStream rng(seed, b);
        const std::size_t lo = b * block_rows;
        const std::size_t hi = std::min(count, lo + block_rows);
        for (std::size_t i = lo; i < hi; ++i) {
            double* row = batch.data.data() + i * batch.dim;
            for (std::size_t h = 0; h < batch.dim; ++h) row[h] = coords[h].sample(rng);
        }
    });
    return batch;
}

namespace {

template <class T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw FormatError("truncated sample batch file");
    return value;
}

}  // namespace

void write_batch_binary(const SampleBatch& batch, std::ostream& out) {
    out.write("SMSB", 4);
    put<std::uint32_t>(out, kBatchFormatVersion);
    put<std::int32_t>(out, batch.m);
    put<std::uint64_t>(out, batch.dim);
    for (double mu : batch.weights) put<double>(out, mu);
    put<std::uint64_t>(out, batch.seed);
    put<std::uint64_t>(out, batch.count);
    put<std::uint64_t>(out, batch.block_rows);
    out.write(reinterpret_cast<const char*>(batch.data.data()),
              static_cast<std::streamsize>(batch.data.size() * sizeof(double)));
}

SampleBatch read_batch_binary(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SMSB", 4) != 0) throw FormatError("not a sample batch file (bad magic)");
    const auto version = get<std::uint32_t>(in);
    if (version != kBatchFormatVersion) throw FormatError("unsupported sample batch version " + std::to_string(version));
    SampleBatch batch;
    batch.m = get<std::int32_t>(in);
    batch.dim = get<std::uint64_t>(in);
    batch.weights.resize(batch.dim);
    for (auto& mu : batch.weights) mu = get<double>(in);
    batch.seed = get<std::uint64_t>(in);
    batch.count = get<std::uint64_t>(in);
    batch.block_rows = get<std::uint64_t>(in);
    batch.data.resize(batch.count * batch.dim);
    in.read(reinterpret_cast<char*>(batch.data.data()), static_cast<std::streamsize>(batch.data.size() * sizeof(double)));
    if (!in) throw FormatError("truncated sample batch payload");
    return batch;
}

void write_batch_csv(const SampleBatch& batch, std::ostream& out) {
    for (std::size_t h = 0; h < batch.dim; ++h) out << (h ? "," : "") << "x" << (h + 1);
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < batch.count; ++i) {
        const auto row = batch.row(i);
        for (std::size_t h = 0; h < batch.dim; ++h) {
            std::snprintf(buf, sizeof buf, "%.17g", row[h]);
            out << (h ? "," : "") << buf;
        }
        out << '\n';
    }
}

}  // namespace surfmeas
