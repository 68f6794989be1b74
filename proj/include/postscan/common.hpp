#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace postscan {

/// Binary post label. Concerning is the positive class (1), Benign the negative (0).
enum class Label : int { Benign = 0, Concerning = 1 };

/// Raised when input data (files, records, manifests) is malformed.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Label label_from_int(long long value);
std::string_view label_name(Label label);

inline int label_index(Label label) { return static_cast<int>(label); }

bool is_valid_utf8(std::string_view text);

/// Default location of the shipped data files (stopwords, translator dictionaries).
std::string data_dir();

/// splitmix64 finalizer; used to derive independent per-item seeds from one run seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Shortest round-trippable decimal for a double.
std::string format_double(double value);

}  // namespace postscan
