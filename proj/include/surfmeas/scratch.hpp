#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>

namespace surfmeas {

/// Per-thread stack of scratch doubles for the per-sample loops. A frame
/// releases everything it handed out when it goes out of scope, so nested
/// combinators each get their own buffers.
class ScratchFrame {
public:
    ScratchFrame() : arena_(arena()), mark_(arena_.top) {}
    ~ScratchFrame() { arena_.top = mark_; }
    ScratchFrame(const ScratchFrame&) = delete;
    ScratchFrame& operator=(const ScratchFrame&) = delete;

    std::span<double> take(std::size_t n) {
        if (arena_.top + n > kCapacity) throw std::length_error("scratch arena exhausted");
        std::span<double> out{arena_.data.get() + arena_.top, n};
        arena_.top += n;
        return out;
    }

private:
    static constexpr std::size_t kCapacity = std::size_t{1} << 16;
    struct Arena {
        std::unique_ptr<double[]> data{new double[kCapacity]};
        std::size_t top = 0;
    };
    static Arena& arena() {
        thread_local Arena a;
        return a;
    }

    Arena& arena_;
    std::size_t mark_;
};

}  // namespace surfmeas
