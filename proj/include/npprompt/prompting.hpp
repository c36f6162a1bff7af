#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "npprompt/tensorio.hpp"

namespace npprompt {

/// Marker emitted at the prediction slot; backends map it to the model's
/// own mask token.
inline constexpr std::string_view kMaskMarker = "[MASK]";

enum class Slot { Text, TextA, TextB, Mask };

enum class TemplateShape { Single, Pair };

/// A prompt pattern such as "A {mask} news : {text} ." split into
/// literal runs and slots. Exactly one {mask}; either {text} or
/// {text_a} (optionally with {text_b}); payload slots may repeat.
class Template {
public:
    using Segment = std::variant<std::string, Slot>;

    static Template parse(std::string_view source);

    const std::vector<Segment>& segments() const noexcept { return segments_; }
    TemplateShape shape() const noexcept { return shape_; }
    bool uses_text_b() const noexcept { return uses_text_b_; }
    const std::string& source() const noexcept { return source_; }

private:
    std::vector<Segment> segments_;
    TemplateShape shape_ = TemplateShape::Single;
    bool uses_text_b_ = false;
    std::string source_;
};

struct RenderedPrompt {
    std::string text;
    std::size_t mask_offset = 0; // byte offset of kMaskMarker in text
};

RenderedPrompt render(const Template& tmpl, const DatasetRecord& record);

} // namespace npprompt
