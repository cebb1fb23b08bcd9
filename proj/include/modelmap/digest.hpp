#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <cstring>
#include <string>

namespace modelmap {

// FNV-1a 64-bit. Content fingerprinting for caching and output metadata,
// not a cryptographic hash.
class Digest {
public:
    Digest() = default;

    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
    }

    void update(const std::string& s) { update(s.data(), s.size()); }

    void update(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        update(&bits, sizeof bits);
    }

    void update(std::uint64_t v) { update(&v, sizeof v); }

    void update(const Eigen::MatrixXd& m) {
        update(static_cast<std::uint64_t>(m.rows()));
        update(static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r)
                update(m(r, c));
    }

    std::uint64_t value() const { return state_; }

    std::string hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out(16, '0');
        std::uint64_t v = state_;
        for (int i = 15; i >= 0; --i) {
            out[static_cast<std::size_t>(i)] = digits[v & 0xf];
            v >>= 4;
        }
        return out;
    }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t matrix_digest(const Eigen::MatrixXd& m) {
    Digest d;
    d.update(m);
    return d.value();
}

}  // namespace modelmap
