#pragma once

#include <cstdint>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qrank::textio {

/// Shortest decimal representation that parses back to the same double.
std::string format_real(double v);

std::optional<double> parse_real(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);
std::optional<std::uint64_t> parse_uint(std::string_view s);

/// Splits on runs of spaces/tabs; never yields empty tokens.
std::vector<std::string_view> split_ws(std::string_view line);

std::string_view trim(std::string_view s);

/// Non-blank lines, trailing '\r' removed.
std::vector<std::string_view> split_lines(std::string_view text);

/// Appends ` <fid>:<value>` for each non-zero entry (fid 1-based).
void append_sparse(std::string& out, std::span<const double> x);
/// Parses `<fid>:<value>` tokens into a dense vector of length `dim`.
std::vector<double> parse_sparse(std::span<const std::string_view> tokens, std::size_t dim);

/// If `token` is `key=value`, returns value.
std::optional<std::string_view> kv_value(std::string_view token, std::string_view key);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace qrank::textio
