#ifndef HMDESIGN_CONSTELLATION_IO_HPP
#define HMDESIGN_CONSTELLATION_IO_HPP

#include <string>

#include "hmdesign/constellation.hpp"

namespace hmdesign {

// Document shape: {"m_h": int, "m_l": int, "points": [[re, im], ...]} with
// points in natural-order index sequence. Coordinates are emitted with 17
// significant digits so they round-trip exactly.
std::string constellation_to_json(const Constellation& c);
Constellation constellation_from_json(const std::string& text);

Constellation load_constellation(const std::string& path);
// Atomic write: temp file in the same directory, then rename.
void save_constellation(const Constellation& c, const std::string& path);

}  // namespace hmdesign

#endif
