#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bpekit {

// Template grammar tokens.
inline constexpr std::string_view kSystemHeader = "<|system|>";
inline constexpr std::string_view kUserHeader = "<|user|>";
inline constexpr std::string_view kAssistantHeader = "<|assistant|>";
inline constexpr std::string_view kToolHeader = "<|tool|>";
inline constexpr std::string_view kEndOfTurn = "<|eot|>";
inline constexpr std::string_view kThinkOpen = "<|think|>";
inline constexpr std::string_view kThinkClose = "<|/think|>";
inline constexpr std::string_view kToolCallOpen = "<|tool_call|>";
inline constexpr std::string_view kToolCallClose = "<|/tool_call|>";
inline constexpr std::string_view kToolResultOpen = "<|tool_result|>";
inline constexpr std::string_view kToolResultClose = "<|/tool_result|>";
inline constexpr std::string_view kPad = "<|pad|>";

inline constexpr std::array<std::string_view, 12> kTemplateSpecials = {
    kSystemHeader,  kUserHeader,       kAssistantHeader, kToolHeader,
    kEndOfTurn,     kThinkOpen,        kThinkClose,      kToolCallOpen,
    kToolCallClose, kToolResultOpen,   kToolResultClose, kPad,
};

enum class Role { kSystem, kUser, kAssistant, kTool };

std::string_view role_name(Role role);

struct TextSegment {
  std::string text;
  bool operator==(const TextSegment&) const = default;
};

struct ThinkSegment {
  std::string text;
  bool operator==(const ThinkSegment&) const = default;
};

struct ToolCallSegment {
  std::string name;
  std::string args;  // canonical JSON: sorted keys, no insignificant spaces
  std::string call_id;
  bool operator==(const ToolCallSegment&) const = default;
};

struct ToolResultSegment {
  std::string call_id;
  std::string payload;
  bool operator==(const ToolResultSegment&) const = default;
};

using Segment =
    std::variant<TextSegment, ThinkSegment, ToolCallSegment, ToolResultSegment>;

struct Message {
  Role role = Role::kUser;
  std::vector<Segment> segments;
  bool operator==(const Message&) const = default;
};

struct Conversation {
  std::vector<Message> messages;
  bool operator==(const Conversation&) const = default;
};

// Throws InvalidConversation naming the first violated rule:
//   - a system message may only appear first
//   - system/user messages hold only text; tool messages hold one or more
//     tool results; think and tool calls only in assistant messages
//   - think segments come before every text and tool call
//   - tool call ids are distinct within an assistant message
//   - every tool result answers a call of the nearest preceding assistant
//   - text segments are non-empty and never adjacent
//   - no content contains a template special string
//   - tool call args are canonical JSON; names and ids are non-empty
void validate(const Conversation& conv);

// Deterministic serialization. <|tool_call|> bodies are canonical JSON
// {"args":…,"id":…,"name":…}; <|tool_result|> bodies are
// {"id":…,"payload":…}.
std::string render(const Conversation& conv, bool add_generation_prompt = false);

// Inverse of render() with the prompt flag off. Throws GrammarError with the
// byte offset of the first offending token.
Conversation parse(std::string_view text);

// Drops think segments from every assistant message except the last
// `keep_last_n` assistant messages.
Conversation strip_reasoning(const Conversation& conv, std::size_t keep_last_n);

// Assistant-visible output (think, text, tool calls) rendered without role
// headers or end-of-turn markers, one assistant message after another.
std::string assistant_output_text(const Conversation& conv);

// Returns `json` re-serialized canonically; throws InvalidConversation when it
// does not parse.
std::string canonical_json(std::string_view json);

// Conversation JSON schema:
//   {"messages":[{"role":"system|user|assistant|tool",
//                 "segments":[{"type":"text","text":…},
//                             {"type":"think","text":…},
//                             {"type":"tool_call","name":…,"args":…,"call_id":…},
//                             {"type":"tool_result","call_id":…,"payload":…}]}]}
// "args" may be a JSON value or a string holding JSON; it is canonicalized.
// "content":"…" may replace "segments" for a single text segment.
// Throws SchemaError.
Conversation conversation_from_json(std::string_view json);
std::string conversation_to_json(const Conversation& conv);

}  // namespace bpekit
