#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace darwinize {

// Shortest decimal that reads back to the same double; "nan", "inf",
// "-inf" for non-finite values. Locale independent.
std::string format_double(double x);

// Comma-separated output with LF line ends. Fields are written as given;
// none of the emitted values need quoting.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);

    CsvWriter& operator<<(double x);
    CsvWriter& operator<<(long long x);
    CsvWriter& operator<<(int x) { return *this << static_cast<long long>(x); }
    CsvWriter& operator<<(long x) { return *this << static_cast<long long>(x); }
    CsvWriter& operator<<(bool x) { return *this << static_cast<long long>(x ? 1 : 0); }
    CsvWriter& operator<<(std::string_view s);
    CsvWriter& operator<<(const char* s) { return *this << std::string_view(s); }

    // Terminates the row; throws if its width differs from the header.
    void end_row();
    void close();

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }

private:
    void field(std::string_view s);

    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_ = 0;
    std::size_t current_ = 0;
    std::size_t rows_ = 0;
};

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace darwinize
