#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maldyn/behavior_log.hpp"

namespace maldyn {

/// A sample rendered as a token stream. sentence_breaks holds the token
/// indices where a new per-process run starts.
struct TokenText {
  std::string sample_id;
  std::vector<std::string> tokens;
  std::vector<std::size_t> sentence_breaks;

  friend bool operator==(const TokenText&, const TokenText&) = default;
};

struct TextConfig {
  bool with_ret = false;     // append "ret=<value>" after each api token
  bool with_exinfo = false;  // append "ex=<value>" per exinfo entry
};

/// api_name stream in call order, with a sentence break wherever call_pid changes.
TokenText to_token_text(const BehaviorLog& log, const TextConfig& config = {});

/// Tokens joined by single spaces, sentences separated by '\n', trailing '\n'.
std::string serialize_tokens(const TokenText& text);

/// Inverse of serialize_tokens (sample_id is not part of the text form).
TokenText parse_tokens(std::string_view text, std::string sample_id = {});

/// Grayscale byte image, row-major.
struct MalImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }

  friend bool operator==(const MalImage&, const MalImage&) = default;
};

/// Packs a string of '0'/'1' characters, most significant bit first, eight bits
/// per byte; a trailing partial byte is zero-padded on the right.
std::vector<std::uint8_t> pack_bits(std::string_view bits);

/// Lays bytes out row-major at `width`, zero-padding the last row, then
/// optionally resizes (nearest neighbour) to target (W, H).
/// Throws ZeroWidth for width 0 and EmptyData for empty input.
MalImage to_image(std::span<const std::uint8_t> data, std::size_t width,
                  std::optional<std::pair<std::size_t, std::size_t>> target = std::nullopt);

MalImage resize_nearest(const MalImage& image, std::size_t width, std::size_t height);

struct ImageConfig {
  std::size_t line_width = 256;
  std::size_t target_width = 64;
  std::size_t target_height = 64;
  bool resize = true;
};

/// Serialized token text bytes -> image.
MalImage text_to_image(const TokenText& text, const ImageConfig& config = {});

MalImage sample_to_image(const BehaviorLog& log, const ImageConfig& config = {}, const TextConfig& text = {});

/// Binary PGM (P5).
std::string to_pgm(const MalImage& image);
MalImage parse_pgm(std::string_view bytes);

}  // namespace maldyn
