#include "ftdr/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace ftdr::io {

namespace {

constexpr char kMagic[5] = {'F', 'T', 'D', 'R', '1'};
constexpr uint16_t kVersion = 1;

void put_u16(std::string& buf, uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xFF));
    buf.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& buf, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

struct Reader {
    const std::string& bytes;
    size_t pos = 0;
    const std::string& path;

    void need(size_t n) const {
        if (pos + n > bytes.size())
            throw ParseError("truncated checkpoint " + path, static_cast<long>(pos));
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(static_cast<unsigned char>(bytes[pos]) |
                                           (static_cast<unsigned char>(bytes[pos + 1]) << 8));
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    float f32() {
        uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str(size_t n) {
        need(n);
        std::string s = bytes.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

uint32_t crc32(const void* data, size_t len, uint32_t seed) {
    static uint32_t table[256];
    static bool init = false;
    if (!init) {
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            table[i] = c;
        }
        init = true;
    }
    uint32_t crc = seed ^ 0xFFFFFFFFu;
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

void save_checkpoint(const ParamStore& store, const std::string& path) {
    std::string buf;
    buf.append(kMagic, 5);
    put_u16(buf, kVersion);
    put_u32(buf, static_cast<uint32_t>(store.size()));
    for (const auto& [name, t] : store.items()) {
        if (name.size() > 0xFFFF) throw ContractError("parameter name too long: " + name);
        put_u16(buf, static_cast<uint16_t>(name.size()));
        buf.append(name);
        buf.push_back(0);  // dtype 0 = f32
        buf.push_back(static_cast<char>(t.rank()));
        for (int d : t.shape()) put_u32(buf, static_cast<uint32_t>(d));
        for (int64_t i = 0; i < t.numel(); ++i) put_f32(buf, static_cast<float>(t[i]));
    }
    put_u32(buf, crc32(buf.data(), buf.size()));
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write checkpoint: " + path);
    f.write(buf.data(), static_cast<long>(buf.size()));
}

ParamStore load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 15) throw ParseError("checkpoint too small: " + path, 0);
    uint32_t stored_crc = crc32(bytes.data(), bytes.size() - 4);
    Reader tail{bytes, bytes.size() - 4, path};
    if (tail.u32() != stored_crc)
        throw ParseError("checkpoint CRC mismatch: " + path,
                         static_cast<long>(bytes.size() - 4));

    Reader r{bytes, 0, path};
    if (r.str(5) != std::string(kMagic, 5)) throw ParseError("bad checkpoint magic: " + path, 0);
    if (r.u16() != kVersion) throw ParseError("unsupported checkpoint version: " + path, 5);
    uint32_t count = r.u32();
    ParamStore store;
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t name_len = r.u16();
        std::string name = r.str(name_len);
        r.need(2);
        unsigned char dtype = static_cast<unsigned char>(bytes[r.pos++]);
        unsigned char rank = static_cast<unsigned char>(bytes[r.pos++]);
        if (dtype != 0)
            throw ParseError("unknown dtype tag in " + path, static_cast<long>(r.pos - 2));
        std::vector<int> shape(rank);
        for (int d = 0; d < rank; ++d) shape[static_cast<size_t>(d)] = static_cast<int>(r.u32());
        Tensor t(shape);
        for (int64_t j = 0; j < t.numel(); ++j) t[j] = static_cast<double>(r.f32());
        store.create(name, t);
    }
    return store;
}

}  // namespace ftdr::io
