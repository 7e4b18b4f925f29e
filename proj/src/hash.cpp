#include "taskspec/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <stdexcept>

namespace taskspec::hash {

namespace {

class Sha256 {
  public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
            throw std::runtime_error("sha256 init failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(std::string_view data) {
        if (EVP_DigestUpdate(ctx_, data.data(), data.size()) != 1)
            throw std::runtime_error("sha256 update failed");
    }

    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_, digest.data(), &len) != 1)
            throw std::runtime_error("sha256 final failed");
        static const char* kHex = "0123456789abcdef";
        std::string out;
        out.reserve(2 * len);
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(kHex[digest[i] >> 4]);
            out.push_back(kHex[digest[i] & 0xF]);
        }
        return out;
    }

  private:
    EVP_MD_CTX* ctx_;
};

void update_length_prefixed(Sha256& h, std::string_view field) {
    uint64_t n = field.size();
    char len_le[8];
    for (int i = 0; i < 8; ++i) len_le[i] = static_cast<char>((n >> (8 * i)) & 0xFF);
    h.update(std::string_view(len_le, 8));
    h.update(field);
}

}  // namespace

std::string sha256_hex(std::string_view data) {
    Sha256 h;
    h.update(data);
    return h.hex();
}

std::string content_hash(std::initializer_list<std::string_view> fields) {
    Sha256 h;
    for (auto f : fields) update_length_prefixed(h, f);
    return h.hex();
}

std::string content_hash(const std::vector<std::string>& fields) {
    Sha256 h;
    for (const auto& f : fields) update_length_prefixed(h, f);
    return h.hex();
}

}  // namespace taskspec::hash
