#pragma once

#include <cstdint>
#include <cstring>

namespace voxwarp {

// IEEE 754 binary16 <-> binary32 conversion. Round-to-nearest-even on the
// way down; exact on the way up. Used for feature storage and wire formats.

inline float half_to_float(uint16_t h) {
    const uint32_t sign = static_cast<uint32_t>(h & 0x8000u) << 16;
    const uint32_t exp = (h >> 10) & 0x1Fu;
    const uint32_t man = h & 0x3FFu;
    uint32_t bits;
    if (exp == 0) {
        if (man == 0) {
            bits = sign;
        } else {
            // Subnormal half: renormalize into a float exponent.
            int e = -1;
            uint32_t m = man;
            do {
                ++e;
                m <<= 1;
            } while ((m & 0x400u) == 0);
            bits = sign | ((127 - 15 - e) << 23) | ((m & 0x3FFu) << 13);
        }
    } else if (exp == 31) {
        bits = sign | 0x7F800000u | (man << 13);
    } else {
        bits = sign | ((exp + 127 - 15) << 23) | (man << 13);
    }
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
}

inline uint16_t float_to_half(float f) {
    uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    const uint16_t sign = static_cast<uint16_t>((bits >> 16) & 0x8000u);
    const int32_t exp = static_cast<int32_t>((bits >> 23) & 0xFFu) - 127 + 15;
    uint32_t man = bits & 0x7FFFFFu;

    if (exp >= 31) {
        if (((bits >> 23) & 0xFFu) == 255) {
            // Inf / NaN; keep a payload bit for NaN.
            return static_cast<uint16_t>(sign | 0x7C00u | (man ? 0x200u : 0));
        }
        return static_cast<uint16_t>(sign | 0x7C00u);  // overflow -> inf
    }
    if (exp <= 0) {
        if (exp < -10) return sign;  // underflow -> signed zero
        // Subnormal target: shift with round-to-nearest-even.
        man |= 0x800000u;
        const int shift = 14 - exp;
        uint32_t half_man = man >> shift;
        const uint32_t rem = man & ((1u << shift) - 1);
        const uint32_t halfway = 1u << (shift - 1);
        if (rem > halfway || (rem == halfway && (half_man & 1u))) ++half_man;
        return static_cast<uint16_t>(sign | half_man);
    }
    uint32_t half_man = man >> 13;
    const uint32_t rem = man & 0x1FFFu;
    uint16_t out = static_cast<uint16_t>(sign | (exp << 10) | half_man);
    if (rem > 0x1000u || (rem == 0x1000u && (half_man & 1u))) ++out;  // may carry into exp
    return out;
}

inline uint16_t quantize_half(float f) { return float_to_half(f); }

}  // namespace voxwarp
