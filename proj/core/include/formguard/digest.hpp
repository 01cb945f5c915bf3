#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace formguard {

/// Incremental FNV-1a 64-bit hash; used for scenario and run-log digests.
class Fnv1a64 {
public:
    void feed_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }
    void feed(double v) { feed_bytes(&v, sizeof v); }
    void feed(std::uint64_t v) { feed_bytes(&v, sizeof v); }
    void feed(std::int64_t v) { feed_bytes(&v, sizeof v); }
    void feed(int v) { feed(static_cast<std::int64_t>(v)); }
    void feed(bool v) { feed(static_cast<std::int64_t>(v)); }
    void feed(std::string_view s) { feed_bytes(s.data(), s.size()); }

    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace formguard
