#include "darwinize/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <memory>

#include <openssl/evp.h>

#include "darwinize/errors.hpp"

namespace darwinize {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";
    std::array<char, 64> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), r.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw InputError("cannot write " + path.string());
    for (auto h : header) field(h);
    columns_ = header.size();
    out_.put('\n');
    current_ = 0;
}

void CsvWriter::field(std::string_view s) {
    if (current_ > 0) out_.put(',');
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    ++current_;
}

CsvWriter& CsvWriter::operator<<(double x) {
    field(format_double(x));
    return *this;
}

CsvWriter& CsvWriter::operator<<(long long x) {
    field(std::to_string(x));
    return *this;
}

CsvWriter& CsvWriter::operator<<(std::string_view s) {
    field(s);
    return *this;
}

void CsvWriter::end_row() {
    if (current_ != columns_)
        throw Error(path_.filename().string() + ": row has " + std::to_string(current_) + " fields, header has " +
                    std::to_string(columns_));
    out_.put('\n');
    current_ = 0;
    ++rows_;
}

void CsvWriter::close() {
    out_.close();
    if (!out_) throw InputError("failed writing " + path_.string());
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 unavailable");
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

}  // namespace darwinize
