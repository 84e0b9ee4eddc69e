#include "netobs/kvfile.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace netobs {

namespace {

struct Token {
    enum class Kind { Ident, Number, String, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    double number = 0.0;
    bool is_integer = false;
    char punct = 0;
    int line = 1;
};

class Lexer {
  public:
    Lexer(const std::string& text, const std::string& source) : text_(text), source_(source) {}

    Token next() {
        skip_space_and_comments();
        Token tok;
        tok.line = line_;
        if (pos_ >= text_.size()) {
            tok.kind = Token::Kind::End;
            return tok;
        }
        char c = text_[pos_];
        if (c == '"') return lex_string();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' ||
            (c == '.' && pos_ + 1 < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
            return lex_number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return lex_ident();
        static const std::string punct = "=[]{},:";
        if (punct.find(c) != std::string::npos) {
            ++pos_;
            tok.kind = Token::Kind::Punct;
            tok.punct = c;
            tok.text.assign(1, c);
            return tok;
        }
        fail("unexpected character '" + std::string(1, c) + "'", line_);
        return tok;  // unreachable
    }

    [[noreturn]] void fail(const std::string& msg, int line) const {
        std::ostringstream os;
        os << source_ << ":" << line << ": " << msg;
        throw ParseError(os.str());
    }

  private:
    void skip_space_and_comments() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    Token lex_string() {
        Token tok;
        tok.line = line_;
        tok.kind = Token::Kind::String;
        ++pos_;  // opening quote
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '\n') fail("unterminated string", tok.line);
            tok.text += text_[pos_++];
        }
        if (pos_ >= text_.size()) fail("unterminated string", tok.line);
        ++pos_;  // closing quote
        return tok;
    }

    Token lex_number() {
        Token tok;
        tok.line = line_;
        tok.kind = Token::Kind::Number;
        std::size_t start = pos_;
        // strtod accepts the full numeric grammar we need (sign, decimal,
        // exponent, inf/nan are excluded because they start with a letter).
        const char* begin = text_.c_str() + start;
        char* end = nullptr;
        tok.number = std::strtod(begin, &end);
        if (end == begin) fail("malformed number", tok.line);
        pos_ = start + static_cast<std::size_t>(end - begin);
        tok.text = text_.substr(start, pos_ - start);
        tok.is_integer = tok.text.find_first_of(".eE") == std::string::npos;
        return tok;
    }

    Token lex_ident() {
        Token tok;
        tok.line = line_;
        tok.kind = Token::Kind::Ident;
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
                tok.text += c;
                ++pos_;
            } else {
                break;
            }
        }
        return tok;
    }

    const std::string& text_;
    std::string source_;
    std::size_t pos_ = 0;
    int line_ = 1;
};

class Parser {
  public:
    Parser(const std::string& text, const std::string& source) : lexer_(text, source) {
        advance();
    }

    KvDocument parse() {
        KvDocument doc;
        doc.root.name = "";
        doc.root.line = 1;
        KvTable* current = &doc.root;
        while (tok_.kind != Token::Kind::End) {
            if (is_punct('[') && peek_is_punct('[')) {
                doc.tables.push_back(parse_table_header());
                current = &doc.tables.back();
            } else if (tok_.kind == Token::Kind::Ident) {
                std::string key = tok_.text;
                int line = tok_.line;
                advance();
                expect_punct('=', "expected '=' after key '" + key + "'");
                KvValue value = parse_value();
                for (const auto& kv : current->entries) {
                    if (kv.first == key)
                        lexer_.fail("duplicate key '" + key + "'", line);
                }
                current->entries.emplace_back(key, std::move(value));
            } else {
                lexer_.fail("expected key or [[table]]", tok_.line);
            }
        }
        return doc;
    }

  private:
    void advance() {
        tok_ = have_peek_ ? peek_ : lexer_.next();
        have_peek_ = false;
    }

    const Token& peek() {
        if (!have_peek_) {
            peek_ = lexer_.next();
            have_peek_ = true;
        }
        return peek_;
    }

    bool is_punct(char c) const { return tok_.kind == Token::Kind::Punct && tok_.punct == c; }

    bool peek_is_punct(char c) {
        const Token& p = peek();
        return p.kind == Token::Kind::Punct && p.punct == c;
    }

    void expect_punct(char c, const std::string& msg) {
        if (!is_punct(c)) lexer_.fail(msg, tok_.line);
        advance();
    }

    KvTable parse_table_header() {
        KvTable table;
        table.line = tok_.line;
        advance();  // first '['
        expect_punct('[', "expected '[[' to open a table");
        if (tok_.kind != Token::Kind::Ident)
            lexer_.fail("expected table name inside [[...]]", tok_.line);
        table.name = tok_.text;
        advance();
        expect_punct(']', "expected ']]' after table name");
        expect_punct(']', "expected ']]' after table name");
        return table;
    }

    KvValue parse_value() {
        KvValue value;
        value.line = tok_.line;
        switch (tok_.kind) {
            case Token::Kind::Number:
                value.kind = KvValue::Kind::Number;
                value.number = tok_.number;
                value.is_integer = tok_.is_integer;
                advance();
                return value;
            case Token::Kind::String:
                value.kind = KvValue::Kind::String;
                value.text = tok_.text;
                advance();
                return value;
            case Token::Kind::Ident:
                lexer_.fail("bare word '" + tok_.text + "' is not a value; quote strings",
                            tok_.line);
                break;
            case Token::Kind::Punct:
                if (tok_.punct == '[') return parse_array();
                if (tok_.punct == '{') return parse_map();
                lexer_.fail("expected a value", tok_.line);
                break;
            case Token::Kind::End:
                lexer_.fail("unexpected end of file while reading a value", tok_.line);
                break;
        }
        return value;  // unreachable
    }

    KvValue parse_array() {
        KvValue value;
        value.kind = KvValue::Kind::Array;
        value.line = tok_.line;
        advance();  // '['
        while (!is_punct(']')) {
            value.array.push_back(parse_value());
            if (is_punct(','))
                advance();
            else if (!is_punct(']'))
                lexer_.fail("expected ',' or ']' in array", tok_.line);
        }
        advance();  // ']'
        return value;
    }

    KvValue parse_map() {
        KvValue value;
        value.kind = KvValue::Kind::Map;
        value.line = tok_.line;
        advance();  // '{'
        while (!is_punct('}')) {
            std::string key;
            if (tok_.kind == Token::Kind::Ident || tok_.kind == Token::Kind::String) {
                key = tok_.text;
            } else {
                lexer_.fail("expected map key", tok_.line);
            }
            int line = tok_.line;
            advance();
            expect_punct(':', "expected ':' after map key '" + key + "'");
            for (const auto& kv : value.map) {
                if (kv.first == key) lexer_.fail("duplicate map key '" + key + "'", line);
            }
            value.map.emplace_back(key, parse_value());
            if (is_punct(','))
                advance();
            else if (!is_punct('}'))
                lexer_.fail("expected ',' or '}' in map", tok_.line);
        }
        advance();  // '}'
        return value;
    }

    Lexer lexer_;
    Token tok_;
    Token peek_;
    bool have_peek_ = false;
};

[[noreturn]] void type_error(const KvValue& v, const std::string& context,
                             const std::string& wanted) {
    std::ostringstream os;
    os << "line " << v.line << ": " << context << " must be " << wanted;
    throw ParseError(os.str());
}

}  // namespace

double KvValue::as_number(const std::string& context) const {
    if (kind != Kind::Number) type_error(*this, context, "a number");
    return number;
}

long KvValue::as_integer(const std::string& context) const {
    if (kind != Kind::Number || !is_integer) type_error(*this, context, "an integer");
    return static_cast<long>(number);
}

const std::string& KvValue::as_string(const std::string& context) const {
    if (kind != Kind::String) type_error(*this, context, "a quoted string");
    return text;
}

const std::vector<KvValue>& KvValue::as_array(const std::string& context) const {
    if (kind != Kind::Array) type_error(*this, context, "an array");
    return array;
}

const std::vector<std::pair<std::string, KvValue>>& KvValue::as_map(
    const std::string& context) const {
    if (kind != Kind::Map) type_error(*this, context, "a {key: value} map");
    return map;
}

const KvValue* KvTable::find(const std::string& key) const {
    for (const auto& kv : entries) {
        if (kv.first == key) return &kv.second;
    }
    return nullptr;
}

const KvValue& KvTable::at(const std::string& key) const {
    const KvValue* v = find(key);
    if (!v) {
        std::ostringstream os;
        os << "line " << line << ": missing required key '" << key << "'"
           << (name.empty() ? "" : " in [[" + name + "]]");
        throw ParseError(os.str());
    }
    return *v;
}

std::vector<const KvTable*> KvDocument::tables_named(const std::string& name) const {
    std::vector<const KvTable*> out;
    for (const auto& t : tables) {
        if (t.name == name) out.push_back(&t);
    }
    return out;
}

KvDocument parse_kv_text(const std::string& text, const std::string& source_name) {
    Parser parser(text, source_name);
    KvDocument doc = parser.parse();
    doc.source = source_name;
    return doc;
}

KvDocument parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_kv_text(buf.str(), path);
}

}  // namespace netobs
