#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace gesgpt {

std::string read_file(const std::string& path);
// Writes through a temporary sibling and renames, so readers never observe a
// partially written file.
void write_file(const std::string& path, std::string_view content);

std::string sha256_hex(std::string_view data);

// Stateless 64-bit mixer; used to derive per-item seeds from a base seed.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace gesgpt
