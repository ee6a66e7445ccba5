#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace tess {

// FNV-1a 64-bit. Provenance fingerprinting only, not collision-resistant.
class Fnv64 {
  public:
    Fnv64& update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    Fnv64& update(const std::string& s) { return update(s.data(), s.size()); }
    std::uint64_t digest() const { return state_; }

  private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv64(const std::string& s) { return Fnv64().update(s).digest(); }

std::string hex64(std::uint64_t v);
std::uint64_t hash_file(const std::string& path);  // throws InputError if unreadable

}  // namespace tess
