#include "maldyn/transform.hpp"

#include <sstream>

#include "maldyn/error.hpp"

namespace maldyn {

TokenText to_token_text(const BehaviorLog& log, const TextConfig& config) {
  TokenText t;
  t.sample_id = log.sample_id;
  for (std::size_t i = 0; i < log.actions.size(); ++i) {
    const Action& a = log.actions[i];
    if (i > 0 && a.call_pid != log.actions[i - 1].call_pid) t.sentence_breaks.push_back(t.tokens.size());
    t.tokens.push_back(a.api_name);
    if (config.with_ret) t.tokens.push_back("ret=" + std::to_string(a.ret_value));
    if (config.with_exinfo)
      for (const auto& e : a.ex_info) t.tokens.push_back("ex=" + e);
  }
  return t;
}

std::string serialize_tokens(const TokenText& text) {
  std::string out;
  std::size_t next_break = 0;
  for (std::size_t i = 0; i < text.tokens.size(); ++i) {
    if (i > 0) {
      if (next_break < text.sentence_breaks.size() && text.sentence_breaks[next_break] == i) {
        out.push_back('\n');
        ++next_break;
      } else {
        out.push_back(' ');
      }
    }
    out += text.tokens[i];
  }
  if (!text.tokens.empty()) out.push_back('\n');
  return out;
}

TokenText parse_tokens(std::string_view text, std::string sample_id) {
  TokenText t;
  t.sample_id = std::move(sample_id);
  std::istringstream lines{std::string(text)};
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream words(line);
    std::string w;
    bool first = true;
    while (words >> w) {
      if (first && !t.tokens.empty()) t.sentence_breaks.push_back(t.tokens.size());
      first = false;
      t.tokens.push_back(w);
    }
  }
  return t;
}

std::vector<std::uint8_t> pack_bits(std::string_view bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1')
      throw Error(ErrorCode::InvalidArgument, "bit string may only contain '0' and '1'");
    if (bits[i] == '1') out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  return out;
}

MalImage resize_nearest(const MalImage& image, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw Error(ErrorCode::ZeroWidth, "target image dimensions must be positive");
  if (width == image.width && height == image.height) return image;
  MalImage out{width, height, std::vector<std::uint8_t>(width * height)};
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = y * image.height / height;
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t sx = x * image.width / width;
      out.pixels[y * width + x] = image.at(sx, sy);
    }
  }
  return out;
}

MalImage to_image(std::span<const std::uint8_t> data, std::size_t width,
                  std::optional<std::pair<std::size_t, std::size_t>> target) {
  if (width == 0) throw Error(ErrorCode::ZeroWidth, "image line width must be at least 1");
  if (data.empty()) throw Error(ErrorCode::EmptyData, "cannot build an image from zero bytes");
  const std::size_t height = (data.size() + width - 1) / width;
  MalImage img{width, height, std::vector<std::uint8_t>(width * height, 0)};
  std::copy(data.begin(), data.end(), img.pixels.begin());
  if (target) return resize_nearest(img, target->first, target->second);
  return img;
}

MalImage text_to_image(const TokenText& text, const ImageConfig& config) {
  if (text.tokens.empty()) throw Error(ErrorCode::EmptyData, "token text is empty");
  const std::string bytes = serialize_tokens(text);
  std::span<const std::uint8_t> data(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size());
  std::optional<std::pair<std::size_t, std::size_t>> target;
  if (config.resize) target = std::pair{config.target_width, config.target_height};
  return to_image(data, config.line_width, target);
}

MalImage sample_to_image(const BehaviorLog& log, const ImageConfig& config, const TextConfig& text) {
  return text_to_image(to_token_text(log, text), config);
}

std::string to_pgm(const MalImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

MalImage parse_pgm(std::string_view bytes) {
  std::size_t pos = 0;
  auto token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return std::string(bytes.substr(start, pos - start));
  };
  if (token() != "P5") throw Error(ErrorCode::FormatError, "not a binary PGM (P5)");
  MalImage img;
  try {
    img.width = std::stoul(token());
    img.height = std::stoul(token());
    if (std::stoul(token()) != 255) throw Error(ErrorCode::FormatError, "only maxval 255 is supported");
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::FormatError, "bad PGM header");
  }
  ++pos;  // single whitespace after maxval
  if (bytes.size() < pos + img.width * img.height) throw Error(ErrorCode::FormatError, "PGM pixel data truncated");
  img.pixels.assign(bytes.begin() + pos, bytes.begin() + pos + img.width * img.height);
  return img;
}

}  // namespace maldyn
