#include "ecg/wfdb.hpp"

#include "ecg/errors.hpp"

#include <array>
#include <charconv>
#include <sstream>

namespace ecg::wfdb {
namespace {

constexpr int kSkip = 59;
constexpr int kNum = 60;
constexpr int kSub = 61;
constexpr int kChn = 62;
constexpr int kAux = 63;

// Indexed by MIT annotation code (see ecgcodes.h in the WFDB library).
constexpr std::array<std::string_view, 50> kSymbols = {
    " ", "N", "L", "R", "a", "V", "F", "J", "A", "S", "E", "j", "/", "Q", "~", "?", "|",
    "?", "s", "T", "*", "D", "\"", "=", "p", "B", "^", "t", "+", "u", "?", "!", "[", "]",
    "e", "n", "@", "x", "f", "(", ")", "r", "?", "?", "?", "?", "?", "?", "?", "?"};

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream in{std::string(line)};
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

// Leading integer of a token like "212x2:1+0"; returns the number of chars used.
std::size_t parse_leading_int(std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc())
        return 0;
    return static_cast<std::size_t>(ptr - s.data());
}

int require_int(const std::string& tok, const char* field, std::size_t line) {
    int v = 0;
    if (!parse_number(std::string_view(tok), v))
        throw ParseError(std::string("invalid ") + field + " '" + tok + "'", line);
    return v;
}

// gain[(baseline)][/units]
void parse_gain_field(const std::string& tok, SignalSpec& sig, bool& has_baseline,
                      std::size_t line) {
    std::string_view s = tok;
    if (auto slash = s.find('/'); slash != std::string_view::npos)
        s = s.substr(0, slash);
    std::string_view gain_part = s;
    if (auto open = s.find('('); open != std::string_view::npos) {
        auto close = s.find(')', open);
        if (close == std::string_view::npos)
            throw ParseError("unterminated baseline in gain field '" + tok + "'", line);
        int baseline = 0;
        if (!parse_number(s.substr(open + 1, close - open - 1), baseline))
            throw ParseError("invalid baseline in gain field '" + tok + "'", line);
        sig.baseline = baseline;
        has_baseline = true;
        gain_part = s.substr(0, open);
    }
    double gain = 0.0;
    if (!parse_number(gain_part, gain))
        throw ParseError("invalid gain '" + tok + "'", line);
    // WFDB treats a zero gain as "uncalibrated" and substitutes the default.
    sig.gain = gain == 0.0 ? 200.0 : gain;
}

} // namespace

std::string_view annotation_symbol(int code) noexcept {
    if (code < 0 || code >= static_cast<int>(kSymbols.size()))
        return "?";
    return kSymbols[static_cast<std::size_t>(code)];
}

RecordHeader parse_header(std::string_view text) {
    RecordHeader header;
    bool have_record_line = false;
    std::size_t line_no = 0;
    std::size_t record_line_no = 0;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view raw = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!raw.empty() && raw.back() == '\r')
            raw.remove_suffix(1);

        auto first = raw.find_first_not_of(" \t");
        if (first == std::string_view::npos || raw[first] == '#')
            continue;
        auto tokens = split_ws(raw);

        if (!have_record_line) {
            record_line_no = line_no;
            if (tokens.size() < 2)
                throw ParseError("record line needs a name and a signal count", line_no);
            if (tokens[0].find('/') != std::string::npos)
                throw UnsupportedFormat("multi-segment records are not supported");
            header.record_name = tokens[0];
            header.num_signals = require_int(tokens[1], "signal count", line_no);
            if (header.num_signals <= 0)
                throw ParseError("record declares no signals", line_no);
            if (tokens.size() < 4)
                throw ParseError("record line lacks sampling frequency or sample count", line_no);
            // fs may carry "/counter_freq(base)" suffixes.
            int fs = 0;
            if (parse_leading_int(tokens[2], fs) == 0 || fs <= 0)
                throw ParseError("invalid sampling frequency '" + tokens[2] + "'", line_no);
            header.sampling_frequency = fs;
            long long n = 0;
            if (!parse_number(std::string_view(tokens[3]), n) || n <= 0)
                throw ParseError("invalid sample count '" + tokens[3] + "'", line_no);
            header.num_samples = static_cast<std::size_t>(n);
            have_record_line = true;
            continue;
        }

        if (static_cast<int>(header.signals.size()) == header.num_signals)
            break;  // trailing non-comment lines (info strings) are ignored

        if (tokens.size() < 2)
            throw ParseError("signal line needs a file name and a format", line_no);
        SignalSpec sig;
        sig.file_name = tokens[0];
        if (parse_leading_int(tokens[1], sig.format_code) == 0)
            throw ParseError("invalid format '" + tokens[1] + "'", line_no);
        if (sig.format_code != 212)
            throw UnsupportedFormat("line " + std::to_string(line_no) + ": format " +
                                    std::to_string(sig.format_code) +
                                    " is not supported (only 212)");
        bool has_baseline = false;
        if (tokens.size() > 2)
            parse_gain_field(tokens[2], sig, has_baseline, line_no);
        if (tokens.size() > 3)
            sig.adc_resolution = require_int(tokens[3], "ADC resolution", line_no);
        if (tokens.size() > 4)
            sig.adc_zero = require_int(tokens[4], "ADC zero", line_no);
        if (tokens.size() > 5)
            sig.initial_value = require_int(tokens[5], "initial value", line_no);
        if (tokens.size() > 6)
            sig.checksum = require_int(tokens[6], "checksum", line_no);
        if (tokens.size() > 7)
            require_int(tokens[7], "block size", line_no);
        if (!has_baseline)
            sig.baseline = sig.adc_zero;
        // The description is the remainder of the line and may contain spaces.
        if (tokens.size() > 8) {
            std::size_t cursor = 0;
            for (std::size_t t = 0; t < 8; ++t) {
                cursor = raw.find(tokens[t], cursor) + tokens[t].size();
            }
            auto desc_start = raw.find_first_not_of(" \t", cursor);
            auto desc = raw.substr(desc_start);
            auto desc_end = desc.find_last_not_of(" \t");
            sig.description = std::string(desc.substr(0, desc_end + 1));
        }
        header.signals.push_back(std::move(sig));
    }

    if (!have_record_line)
        throw ParseError("missing record line");
    if (static_cast<int>(header.signals.size()) != header.num_signals)
        throw ParseError("expected " + std::to_string(header.num_signals) +
                             " signal lines, found " + std::to_string(header.signals.size()),
                         line_no);
    if (header.num_signals != 2)
        throw ParseError("expected 2 signals, header declares " +
                             std::to_string(header.num_signals),
                         record_line_no);
    if (header.sampling_frequency != 360)
        throw ParseError("expected 360 Hz, header declares " +
                             std::to_string(header.sampling_frequency),
                         record_line_no);
    if (header.signals[0].file_name != header.signals[1].file_name)
        throw UnsupportedFormat("format 212 signals stored in separate files");
    return header;
}

Format212Samples decode_format212(std::span<const std::uint8_t> bytes, std::size_t num_samples) {
    const std::size_t needed = num_samples * 3;
    if (bytes.size() < needed)
        throw TruncatedSignal(needed, bytes.size());

    auto sign_extend = [](unsigned v) {
        return static_cast<std::int16_t>(v & 0x800 ? static_cast<int>(v) - 0x1000
                                                   : static_cast<int>(v));
    };

    Format212Samples out;
    out.channel0.resize(num_samples);
    out.channel1.resize(num_samples);
    for (std::size_t i = 0; i < num_samples; ++i) {
        const unsigned b0 = bytes[3 * i];
        const unsigned b1 = bytes[3 * i + 1];
        const unsigned b2 = bytes[3 * i + 2];
        out.channel0[i] = sign_extend(b0 | ((b1 & 0x0F) << 8));
        out.channel1[i] = sign_extend(b2 | ((b1 & 0xF0) << 4));
    }
    return out;
}

std::vector<BeatAnnotation> parse_annotations(std::span<const std::uint8_t> bytes,
                                              std::optional<std::size_t> num_samples) {
    std::vector<BeatAnnotation> out;
    long long time = 0;
    std::size_t pos = 0;

    auto word_at = [&](std::size_t at) {
        return static_cast<unsigned>(bytes[at]) | (static_cast<unsigned>(bytes[at + 1]) << 8);
    };

    while (true) {
        if (pos + 2 > bytes.size())
            throw ParseError("annotation stream ends without a zero terminator");
        const unsigned word = word_at(pos);
        pos += 2;
        const int type = static_cast<int>(word >> 10);
        const unsigned value = word & 0x3FF;

        if (word == 0)
            break;
        switch (type) {
        case kSkip: {
            if (pos + 4 > bytes.size())
                throw ParseError("SKIP word truncated at byte " + std::to_string(pos));
            // PDP-11 long: high 16-bit word first, each word little-endian.
            const std::uint32_t hi = word_at(pos);
            const std::uint32_t lo = word_at(pos + 2);
            pos += 4;
            time += static_cast<std::int32_t>((hi << 16) | lo);
            break;
        }
        case kNum:
        case kSub:
        case kChn:
            break;
        case kAux:
            pos += value + (value & 1);
            if (pos > bytes.size())
                throw ParseError("AUX string runs past end of stream");
            break;
        default: {
            time += value;
            if (time < 0)
                throw RangeError("annotation index " + std::to_string(time) + " is negative");
            if (num_samples && static_cast<std::size_t>(time) >= *num_samples)
                throw RangeError("annotation index " + std::to_string(time) +
                                 " outside record of " + std::to_string(*num_samples) +
                                 " samples");
            BeatAnnotation ann;
            ann.sample_index = static_cast<std::size_t>(time);
            ann.code = type;
            ann.symbol = std::string(annotation_symbol(type));
            out.push_back(std::move(ann));
            break;
        }
        }
    }
    return out;
}

} // namespace ecg::wfdb
