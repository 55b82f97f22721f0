#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace meterbench {

// Minimal SHA-256, enough for content-addressed stage caching and the
// determinism checks on generated files.
class Sha256 {
public:
    Sha256();
    void update(const void* data, std::size_t len);
    // Hex digest; the object must not be updated afterwards.
    std::string hex_digest();

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[8];
    std::uint64_t bit_len_ = 0;
    std::uint8_t buffer_[64];
    std::size_t buffer_len_ = 0;
};

std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::string& path); // throws DataError if unreadable

} // namespace meterbench
