#include "core/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>

#include "core/errors.hpp"

namespace legigpt::hash {

namespace {

std::string to_hex(const unsigned char* digest, unsigned len) {
    static const char* kHex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0x0F]);
    }
    return out;
}

struct Digest {
    EVP_MD_CTX* ctx;
    Digest() : ctx(EVP_MD_CTX_new()) {
        if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
            throw Error(errc::internal, "sha256 init failed");
        }
    }
    ~Digest() { EVP_MD_CTX_free(ctx); }
    void update(const void* data, std::size_t len) {
        if (EVP_DigestUpdate(ctx, data, len) != 1) {
            throw Error(errc::internal, "sha256 update failed");
        }
    }
    std::string finish() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
        unsigned len = 0;
        if (EVP_DigestFinal_ex(ctx, digest.data(), &len) != 1) {
            throw Error(errc::internal, "sha256 final failed");
        }
        return to_hex(digest.data(), len);
    }
};

}  // namespace

std::string sha256_hex(std::string_view data) {
    Digest d;
    d.update(data.data(), data.size());
    return d.finish();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(errc::io, "cannot open '" + path.string() + "'");
    Digest d;
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return d.finish();
}

}  // namespace legigpt::hash
