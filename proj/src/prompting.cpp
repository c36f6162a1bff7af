#include "npprompt/prompting.hpp"

#include <cctype>

#include "npprompt/error.hpp"

namespace npprompt {

namespace {

bool is_ident(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

} // namespace

Template Template::parse(std::string_view source) {
    Template t;
    t.source_ = std::string(source);
    std::string literal;
    int masks = 0;
    bool has_text = false;
    bool has_a = false;
    bool has_b = false;

    std::size_t i = 0;
    while (i < source.size()) {
        if (source[i] == '{') {
            std::size_t j = i + 1;
            while (j < source.size() && is_ident(source[j])) ++j;
            if (j < source.size() && source[j] == '}' && j > i + 1) {
                const auto name = source.substr(i + 1, j - i - 1);
                Slot slot;
                if (name == "text") {
                    slot = Slot::Text;
                    has_text = true;
                } else if (name == "text_a") {
                    slot = Slot::TextA;
                    has_a = true;
                } else if (name == "text_b") {
                    slot = Slot::TextB;
                    has_b = true;
                } else if (name == "mask") {
                    slot = Slot::Mask;
                    ++masks;
                } else {
                    throw Error(ErrorCode::UnknownPlaceholder,
                                "unknown placeholder {" + std::string(name) + "}");
                }
                if (!literal.empty()) {
                    t.segments_.emplace_back(std::move(literal));
                    literal.clear();
                }
                t.segments_.emplace_back(slot);
                i = j + 1;
                continue;
            }
        }
        literal.push_back(source[i]);
        ++i;
    }
    if (!literal.empty()) {
        t.segments_.emplace_back(std::move(literal));
    }

    if (masks == 0) {
        throw Error(ErrorCode::MissingMask, "template has no {mask}");
    }
    if (masks > 1) {
        throw Error(ErrorCode::MultipleMask, "template has more than one {mask}");
    }
    if (has_text && (has_a || has_b)) {
        throw Error(ErrorCode::MixedSlots, "template mixes {text} with {text_a}/{text_b}");
    }
    if (has_b && !has_a) {
        throw Error(ErrorCode::MixedSlots, "template uses {text_b} without {text_a}");
    }
    if (!has_text && !has_a) {
        throw Error(ErrorCode::MixedSlots, "template has no text slot");
    }
    t.shape_ = has_text ? TemplateShape::Single : TemplateShape::Pair;
    t.uses_text_b_ = has_b;
    return t;
}

RenderedPrompt render(const Template& tmpl, const DatasetRecord& record) {
    if (tmpl.shape() == TemplateShape::Single && !record.text) {
        throw Error(ErrorCode::RecordShapeMismatch,
                    "single-sentence template needs a text record", record.id);
    }
    if (tmpl.shape() == TemplateShape::Pair) {
        if (!record.text_a) {
            throw Error(ErrorCode::RecordShapeMismatch, "pair template needs text_a", record.id);
        }
        if (tmpl.uses_text_b() && !record.text_b) {
            throw Error(ErrorCode::RecordShapeMismatch, "pair template needs text_b", record.id);
        }
    }

    RenderedPrompt out;
    for (const auto& segment : tmpl.segments()) {
        if (const auto* lit = std::get_if<std::string>(&segment)) {
            out.text += *lit;
            continue;
        }
        switch (std::get<Slot>(segment)) {
        case Slot::Text: out.text += *record.text; break;
        case Slot::TextA: out.text += *record.text_a; break;
        case Slot::TextB: out.text += *record.text_b; break;
        case Slot::Mask:
            out.mask_offset = out.text.size();
            out.text += kMaskMarker;
            break;
        }
    }
    return out;
}

} // namespace npprompt
