#include "bpekit/chat_template.hpp"

#include <optional>
#include <set>

#include "bpekit/errors.hpp"
#include "bpekit/unicode.hpp"
#include "json.hpp"

namespace bpekit {

using json = nlohmann::json;

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
    case Role::kTool: return "tool";
  }
  return "user";
}

namespace {

constexpr std::size_t kWholeMessage = static_cast<std::size_t>(-1);

std::string_view header_for(Role role) {
  switch (role) {
    case Role::kSystem: return kSystemHeader;
    case Role::kUser: return kUserHeader;
    case Role::kAssistant: return kAssistantHeader;
    case Role::kTool: return kToolHeader;
  }
  return kUserHeader;
}

std::optional<Role> role_for_header(std::string_view token) {
  if (token == kSystemHeader) return Role::kSystem;
  if (token == kUserHeader) return Role::kUser;
  if (token == kAssistantHeader) return Role::kAssistant;
  if (token == kToolHeader) return Role::kTool;
  return std::nullopt;
}

bool contains_special(std::string_view s) {
  if (s.find("<|") == std::string_view::npos) return false;
  for (const auto special : kTemplateSpecials) {
    if (s.find(special) != std::string_view::npos) return true;
  }
  return false;
}

bool valid_utf8(std::string_view s) {
  for (std::size_t i = 0; i < s.size();) {
    const auto d = unicode::decode_utf8(s, i);
    if (!d) return false;
    i += d->length;
  }
  return true;
}

std::optional<std::string> try_canonical(std::string_view text) {
  try {
    return json::parse(text).dump();
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

struct Violation {
  std::size_t message;
  std::size_t segment;  // kWholeMessage when the message itself is at fault
  std::string rule;
};

std::optional<Violation> find_violation(const Conversation& conv) {
  std::set<std::string> open_calls;  // ids from the nearest assistant message
  for (std::size_t m = 0; m < conv.messages.size(); ++m) {
    const Message& msg = conv.messages[m];
    const auto fail = [&](std::size_t s, std::string rule) {
      return Violation{m, s, std::move(rule)};
    };
    if (msg.role == Role::kSystem && m != 0) {
      return fail(kWholeMessage, "a system message may only appear first");
    }
    if (msg.role == Role::kTool && msg.segments.empty()) {
      return fail(kWholeMessage, "a tool message needs at least one tool result");
    }
    if (msg.role == Role::kAssistant) open_calls.clear();

    bool past_think = false;
    bool prev_text = false;
    std::set<std::string> call_ids;
    for (std::size_t s = 0; s < msg.segments.size(); ++s) {
      const Segment& seg = msg.segments[s];
      if (const auto* text = std::get_if<TextSegment>(&seg)) {
        if (msg.role == Role::kTool) {
          return fail(s, "tool messages hold only tool results");
        }
        if (text->text.empty()) return fail(s, "empty text segment");
        if (prev_text) return fail(s, "adjacent text segments");
        if (contains_special(text->text)) {
          return fail(s, "content contains a template special token");
        }
        past_think = true;
        prev_text = true;
        continue;
      }
      prev_text = false;
      if (const auto* think = std::get_if<ThinkSegment>(&seg)) {
        if (msg.role != Role::kAssistant) {
          return fail(s, "think segments only appear in assistant messages");
        }
        if (past_think) {
          return fail(s, "think segments must precede text and tool calls");
        }
        if (contains_special(think->text)) {
          return fail(s, "content contains a template special token");
        }
      } else if (const auto* call = std::get_if<ToolCallSegment>(&seg)) {
        if (msg.role != Role::kAssistant) {
          return fail(s, "tool calls only appear in assistant messages");
        }
        past_think = true;
        if (call->name.empty() || call->call_id.empty()) {
          return fail(s, "tool call name and id must be non-empty");
        }
        if (!valid_utf8(call->name) || !valid_utf8(call->call_id) ||
            !valid_utf8(call->args)) {
          return fail(s, "tool call fields must be valid UTF-8");
        }
        if (contains_special(call->name) || contains_special(call->call_id) ||
            contains_special(call->args)) {
          return fail(s, "content contains a template special token");
        }
        if (try_canonical(call->args) != call->args) {
          return fail(s, "tool call args must be canonical JSON");
        }
        if (!call_ids.insert(call->call_id).second) {
          return fail(s, "duplicate tool call id '" + call->call_id + "'");
        }
      } else if (const auto* result = std::get_if<ToolResultSegment>(&seg)) {
        if (msg.role != Role::kTool) {
          return fail(s, "tool results only appear in tool messages");
        }
        if (!valid_utf8(result->call_id) || !valid_utf8(result->payload)) {
          return fail(s, "tool result fields must be valid UTF-8");
        }
        if (contains_special(result->call_id) || contains_special(result->payload)) {
          return fail(s, "content contains a template special token");
        }
        if (!open_calls.contains(result->call_id)) {
          return fail(s, "tool result id '" + result->call_id +
                             "' has no matching call in the preceding assistant message");
        }
      }
    }
    if (msg.role == Role::kAssistant) open_calls = std::move(call_ids);
  }
  return std::nullopt;
}

void render_segment(const Segment& seg, std::string& out) {
  if (const auto* text = std::get_if<TextSegment>(&seg)) {
    out += text->text;
  } else if (const auto* think = std::get_if<ThinkSegment>(&seg)) {
    out += kThinkOpen;
    out += think->text;
    out += kThinkClose;
  } else if (const auto* call = std::get_if<ToolCallSegment>(&seg)) {
    json body = json::object();
    body["args"] = json::parse(call->args);
    body["id"] = call->call_id;
    body["name"] = call->name;
    out += kToolCallOpen;
    out += body.dump();
    out += kToolCallClose;
  } else if (const auto* result = std::get_if<ToolResultSegment>(&seg)) {
    json body = json::object();
    body["id"] = result->call_id;
    body["payload"] = result->payload;
    out += kToolResultOpen;
    out += body.dump();
    out += kToolResultClose;
  }
}

struct Lexeme {
  bool special;
  std::string_view text;
  std::size_t offset;
};

std::vector<Lexeme> lex(std::string_view text) {
  std::vector<Lexeme> out;
  std::size_t literal_start = 0;
  std::size_t pos = text.find("<|");
  while (pos != std::string_view::npos) {
    std::string_view matched;
    for (const auto special : kTemplateSpecials) {
      if (text.substr(pos, special.size()) == special) {
        matched = special;
        break;
      }
    }
    if (matched.empty()) {
      pos = text.find("<|", pos + 1);
      continue;
    }
    if (pos > literal_start) {
      out.push_back({false, text.substr(literal_start, pos - literal_start),
                     literal_start});
    }
    out.push_back({true, matched, pos});
    literal_start = pos + matched.size();
    pos = text.find("<|", literal_start);
  }
  if (literal_start < text.size()) {
    out.push_back({false, text.substr(literal_start), literal_start});
  }
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text), lexemes_(lex(text)) {}

  Conversation run() {
    Conversation conv;
    while (i_ < lexemes_.size()) {
      const Lexeme& head = lexemes_[i_];
      const auto role = head.special ? role_for_header(head.text) : std::nullopt;
      if (!role) throw GrammarError(head.offset, "expected a role header");
      ++i_;
      message_offsets_.push_back(head.offset);
      segment_offsets_.emplace_back();
      conv.messages.push_back(parse_message(*role));
    }
    if (const auto v = find_violation(conv)) {
      const std::size_t offset =
          v->segment == kWholeMessage
              ? message_offsets_[v->message]
              : segment_offsets_[v->message][v->segment];
      throw GrammarError(offset, v->rule);
    }
    return conv;
  }

 private:
  Message parse_message(Role role) {
    Message msg{role, {}};
    auto& offsets = segment_offsets_.back();
    while (true) {
      if (i_ >= lexemes_.size()) {
        throw GrammarError(text_.size(), "unterminated message");
      }
      const Lexeme& lx = lexemes_[i_++];
      if (!lx.special) {
        offsets.push_back(lx.offset);
        msg.segments.push_back(TextSegment{std::string(lx.text)});
        continue;
      }
      if (lx.text == kEndOfTurn) return msg;
      if (lx.text == kThinkOpen) {
        offsets.push_back(lx.offset);
        msg.segments.push_back(ThinkSegment{std::string(body_until(kThinkClose))});
      } else if (lx.text == kToolCallOpen) {
        offsets.push_back(lx.offset);
        msg.segments.push_back(parse_tool_call(lx.offset, body_until(kToolCallClose)));
      } else if (lx.text == kToolResultOpen) {
        offsets.push_back(lx.offset);
        msg.segments.push_back(
            parse_tool_result(lx.offset, body_until(kToolResultClose)));
      } else {
        throw GrammarError(lx.offset, "unexpected " + std::string(lx.text));
      }
    }
  }

  // Optional literal followed by the required closing token.
  std::string_view body_until(std::string_view close) {
    std::string_view body;
    if (i_ < lexemes_.size() && !lexemes_[i_].special) body = lexemes_[i_++].text;
    if (i_ >= lexemes_.size()) {
      throw GrammarError(text_.size(), "missing " + std::string(close));
    }
    const Lexeme& lx = lexemes_[i_++];
    if (!lx.special || lx.text != close) {
      throw GrammarError(lx.offset, "expected " + std::string(close));
    }
    return body;
  }

  static json parse_body(std::size_t offset, std::string_view body,
                         std::initializer_list<std::string_view> keys) {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::exception&) {
      throw GrammarError(offset, "malformed JSON body");
    }
    if (!doc.is_object() || doc.size() != keys.size()) {
      throw GrammarError(offset, "unexpected JSON body shape");
    }
    for (const auto key : keys) {
      if (!doc.contains(key)) {
        throw GrammarError(offset, "JSON body lacks \"" + std::string(key) + "\"");
      }
    }
    return doc;
  }

  static ToolCallSegment parse_tool_call(std::size_t offset, std::string_view body) {
    const json doc = parse_body(offset, body, {"args", "id", "name"});
    if (!doc["id"].is_string() || !doc["name"].is_string()) {
      throw GrammarError(offset, "tool call id and name must be strings");
    }
    return {doc["name"].get<std::string>(), doc["args"].dump(),
            doc["id"].get<std::string>()};
  }

  static ToolResultSegment parse_tool_result(std::size_t offset,
                                             std::string_view body) {
    const json doc = parse_body(offset, body, {"id", "payload"});
    if (!doc["id"].is_string() || !doc["payload"].is_string()) {
      throw GrammarError(offset, "tool result id and payload must be strings");
    }
    return {doc["id"].get<std::string>(), doc["payload"].get<std::string>()};
  }

  std::string_view text_;
  std::vector<Lexeme> lexemes_;
  std::size_t i_ = 0;
  std::vector<std::size_t> message_offsets_;
  std::vector<std::vector<std::size_t>> segment_offsets_;
};

}  // namespace

void validate(const Conversation& conv) {
  if (const auto v = find_violation(conv)) {
    std::string where = "message " + std::to_string(v->message);
    if (v->segment != kWholeMessage) {
      where += ", segment " + std::to_string(v->segment);
    }
    throw Error(ErrorCode::kInvalidConversation, where + ": " + v->rule);
  }
}

std::string render(const Conversation& conv, bool add_generation_prompt) {
  validate(conv);
  std::string out;
  for (const auto& msg : conv.messages) {
    out += header_for(msg.role);
    for (const auto& seg : msg.segments) render_segment(seg, out);
    out += kEndOfTurn;
  }
  if (add_generation_prompt) out += kAssistantHeader;
  return out;
}

Conversation parse(std::string_view text) { return Parser(text).run(); }

Conversation strip_reasoning(const Conversation& conv, std::size_t keep_last_n) {
  Conversation out = conv;
  std::size_t assistants_seen = 0;
  for (auto it = out.messages.rbegin(); it != out.messages.rend(); ++it) {
    if (it->role != Role::kAssistant) continue;
    if (assistants_seen++ < keep_last_n) continue;
    std::erase_if(it->segments, [](const Segment& s) {
      return std::holds_alternative<ThinkSegment>(s);
    });
  }
  return out;
}

std::string assistant_output_text(const Conversation& conv) {
  validate(conv);
  std::string out;
  for (const auto& msg : conv.messages) {
    if (msg.role != Role::kAssistant) continue;
    for (const auto& seg : msg.segments) render_segment(seg, out);
  }
  return out;
}

std::string canonical_json(std::string_view text) {
  if (auto canonical = try_canonical(text)) return *std::move(canonical);
  throw Error(ErrorCode::kInvalidConversation, "not valid JSON: " + std::string(text));
}

Conversation conversation_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaError, std::string("malformed JSON: ") + e.what());
  }
  const auto field = [](const json& obj, const char* key) -> std::string {
    if (!obj.contains(key) || !obj[key].is_string()) {
      throw Error(ErrorCode::kSchemaError,
                  std::string("expected string field \"") + key + "\"");
    }
    return obj[key].get<std::string>();
  };

  if (!doc.is_object() || !doc.contains("messages") || !doc["messages"].is_array()) {
    throw Error(ErrorCode::kSchemaError, "expected {\"messages\": [...]}");
  }
  Conversation conv;
  for (const auto& m : doc["messages"]) {
    if (!m.is_object()) throw Error(ErrorCode::kSchemaError, "message must be an object");
    Message msg;
    const std::string role = field(m, "role");
    if (role == "system") msg.role = Role::kSystem;
    else if (role == "user") msg.role = Role::kUser;
    else if (role == "assistant") msg.role = Role::kAssistant;
    else if (role == "tool") msg.role = Role::kTool;
    else throw Error(ErrorCode::kSchemaError, "unknown role \"" + role + "\"");

    json segments;
    if (m.contains("segments") && m.contains("content")) {
      throw Error(ErrorCode::kSchemaError, "message has both \"segments\" and \"content\"");
    } else if (m.contains("content")) {
      // Shorthand: a plain string is a single text segment.
      segments = json::array({{{"type", "text"}, {"text", field(m, "content")}}});
    } else if (m.contains("segments")) {
      segments = m["segments"];
    } else {
      throw Error(ErrorCode::kSchemaError, "message needs \"segments\" or \"content\"");
    }
    if (!segments.is_array()) {
      throw Error(ErrorCode::kSchemaError, "\"segments\" must be an array");
    }
    for (const auto& s : segments) {
      if (!s.is_object()) throw Error(ErrorCode::kSchemaError, "segment must be an object");
      const std::string type = field(s, "type");
      if (type == "text") {
        msg.segments.push_back(TextSegment{field(s, "text")});
      } else if (type == "think") {
        msg.segments.push_back(ThinkSegment{field(s, "text")});
      } else if (type == "tool_call") {
        if (!s.contains("args")) throw Error(ErrorCode::kSchemaError, "tool_call lacks \"args\"");
        std::string args;
        if (s["args"].is_string()) {
          const auto canonical = try_canonical(s["args"].get<std::string>());
          if (!canonical) {
            throw Error(ErrorCode::kSchemaError, "tool_call args string is not JSON");
          }
          args = *canonical;
        } else {
          args = s["args"].dump();
        }
        msg.segments.push_back(
            ToolCallSegment{field(s, "name"), std::move(args), field(s, "call_id")});
      } else if (type == "tool_result") {
        msg.segments.push_back(
            ToolResultSegment{field(s, "call_id"), field(s, "payload")});
      } else {
        throw Error(ErrorCode::kSchemaError, "unknown segment type \"" + type + "\"");
      }
    }
    conv.messages.push_back(std::move(msg));
  }
  return conv;
}

std::string conversation_to_json(const Conversation& conv) {
  json messages = json::array();
  for (const auto& msg : conv.messages) {
    json segments = json::array();
    for (const auto& seg : msg.segments) {
      if (const auto* t = std::get_if<TextSegment>(&seg)) {
        segments.push_back({{"type", "text"}, {"text", t->text}});
      } else if (const auto* th = std::get_if<ThinkSegment>(&seg)) {
        segments.push_back({{"type", "think"}, {"text", th->text}});
      } else if (const auto* c = std::get_if<ToolCallSegment>(&seg)) {
        segments.push_back({{"type", "tool_call"},
                            {"name", c->name},
                            {"args", c->args},
                            {"call_id", c->call_id}});
      } else if (const auto* r = std::get_if<ToolResultSegment>(&seg)) {
        segments.push_back({{"type", "tool_result"},
                            {"call_id", r->call_id},
                            {"payload", r->payload}});
      }
    }
    messages.push_back({{"role", std::string(role_name(msg.role))},
                        {"segments", std::move(segments)}});
  }
  try {
    return json{{"messages", std::move(messages)}}.dump();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaError, e.what());
  }
}

}  // namespace bpekit
