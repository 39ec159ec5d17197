#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace floodsignal::detail {

/// Exceptions must not escape an OpenMP region. Iterations run through
/// guard(); the lowest-index failure is rethrown once the loop is done, so
/// the reported error does not depend on scheduling.
class LoopErrors {
public:
    template <class F>
    void guard(std::ptrdiff_t index, F&& body) noexcept {
        try {
            body();
        } catch (...) {
            std::lock_guard lock(mutex_);
            if (!error_ || index < index_) {
                error_ = std::current_exception();
                index_ = index;
            }
        }
    }

    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::mutex mutex_;
    std::exception_ptr error_;
    std::ptrdiff_t index_ = 0;
};

}  // namespace floodsignal::detail
