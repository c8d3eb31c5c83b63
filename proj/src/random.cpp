#include "pgrecruit/random.hpp"

namespace pgrecruit
{

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index)
{
    return splitmix64(splitmix64(splitmix64(root) ^ stream) ^ index);
}

std::uint64_t hash_id(std::string_view id)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const unsigned char c : id)
    {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace pgrecruit
