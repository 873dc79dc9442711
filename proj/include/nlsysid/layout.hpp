#pragma once

#include "nlsysid/types.hpp"

namespace nlsysid {

/// Partition of a stream X_0..X_T into N blocks of S = B + u samples. Block t
/// holds X_{tS} .. X_{tS+S-1}; its first u samples are the gap, and the B
/// pairs (X_{tS+j}, X_{tS+j+1}) for j = u..S-1 are the ones learned from.
/// Samples past N*S (the T mod S tail) are never used.
class BufferLayout {
public:
    BufferLayout(Index buffer_size, Index gap, Index horizon) : buffer_(buffer_size), gap_(gap) {
        if (buffer_size < 1) throw InvalidArgument("buffer size must be >= 1");
        if (gap < 0) throw InvalidArgument("buffer gap must be >= 0");
        n_buffers_ = horizon / block();
        if (n_buffers_ < 1) throw InvalidArgument("horizon shorter than one buffer block");
    }

    Index buffer_size() const noexcept { return buffer_; }
    Index gap() const noexcept { return gap_; }
    Index block() const noexcept { return buffer_ + gap_; }
    Index n_buffers() const noexcept { return n_buffers_; }
    // Last stream index any buffer touches (the lookahead target of the final buffer).
    Index last_index() const noexcept { return n_buffers_ * block(); }

    // X^t_j == X_{tS+j}
    Index index(Index t, Index j) const noexcept { return t * block() + j; }
    // X^t_{-i} == X^t_{(S-1)-i}
    Index reversed(Index t, Index i) const noexcept { return index(t, block() - 1 - i); }

    bool recommended_ratio() const noexcept { return buffer_ >= 10 * gap_; }

private:
    Index buffer_;
    Index gap_;
    Index n_buffers_ = 0;
};

}  // namespace nlsysid
