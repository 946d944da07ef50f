#include <cctype>
#include <map>
#include <string>

#include "abplab/operators.hpp"

namespace abplab {

std::vector<std::string> catalog_forms() {
  return {
      "det:n=N            determinant, degree n",
      "sigma:k=K,n=N      k-th elementary symmetric function of the eigenvalues, degree k",
      "pfold:p=P,n=N      product of all p-fold eigenvalue sums, degree C(n,p)",
      "trace:n=N          trace, degree 1",
      "normsqdet:n=N      squared Frobenius norm times determinant, degree n+2",
      "prod(OP,OP)        product of two operators on the same dimension",
      "rderiv(OP,l=L)     l-th derivative of t -> OP(tI + A) at t = 0, degree N-l",
  };
}

namespace {

// Recursive descent over
//   op     := call | simple
//   call   := "prod(" op "," op ")" | "rderiv(" op "," "l=" int ")"
//   simple := name ":" key "=" int ("," key "=" int)*
// A comma ends a simple form's key list unless it is followed by "key=" with
// a key the form accepts, so "rderiv(det:n=3,l=1)" reads l as rderiv's.
class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  PolyOperator parse() {
    PolyOperator op = parse_op();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing text");
    return op;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    std::string msg = "cannot parse operator \"" + s_ + "\" at position " + std::to_string(pos_) +
                      ": " + why + ". Valid forms:";
    for (const auto& f : catalog_forms()) msg += "\n  " + f;
    throw ArgumentError(msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  std::string ident() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (start == pos_) fail("expected a name");
    return s_.substr(start, pos_ - start);
  }

  int integer() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected an integer");
    try {
      return std::stoi(s_.substr(start, pos_ - start));
    } catch (const std::exception&) {
      fail("integer out of range");
    }
  }

  static bool accepts(const std::string& name, const std::string& key) {
    if (key == "n") return true;
    return (name == "sigma" && key == "k") || (name == "pfold" && key == "p");
  }

  // True if the text after the current comma is "key=" for a key of `name`.
  bool next_is_key(const std::string& name) const {
    std::size_t p = pos_;
    while (p < s_.size() && std::isspace(static_cast<unsigned char>(s_[p]))) ++p;
    const std::size_t start = p;
    while (p < s_.size() && std::isalpha(static_cast<unsigned char>(s_[p]))) ++p;
    if (p == start) return false;
    const std::string key = s_.substr(start, p - start);
    while (p < s_.size() && std::isspace(static_cast<unsigned char>(s_[p]))) ++p;
    return p < s_.size() && s_[p] == '=' && accepts(name, key);
  }

  PolyOperator parse_op() {
    const std::string name = ident();
    if (name == "prod") {
      expect('(');
      PolyOperator a = parse_op();
      expect(',');
      PolyOperator b = parse_op();
      expect(')');
      return PolyOperator::product(a, b);
    }
    if (name == "rderiv") {
      expect('(');
      PolyOperator base = parse_op();
      expect(',');
      if (ident() != "l") fail("rderiv expects l=L after the base operator");
      expect('=');
      const int l = integer();
      expect(')');
      return PolyOperator::radial_derivative(base, l);
    }
    expect(':');
    std::map<std::string, int> kv;
    while (true) {
      const std::string key = ident();
      expect('=');
      if (kv.count(key)) fail("duplicate key '" + key + "'");
      kv[key] = integer();
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ',') {
        const std::size_t comma = pos_++;
        if (next_is_key(name)) continue;
        pos_ = comma;  // the comma belongs to an enclosing call
      }
      break;
    }
    auto take = [&](const char* key) {
      auto it = kv.find(key);
      if (it == kv.end()) fail(name + " needs " + key + "=");
      const int v = it->second;
      kv.erase(it);
      return v;
    };
    auto done = [&] {
      if (!kv.empty()) fail("unknown key '" + kv.begin()->first + "' for " + name);
    };
    if (name == "det") {
      const int n = take("n");
      done();
      return PolyOperator::det(n);
    }
    if (name == "sigma") {
      const int k = take("k");
      const int n = take("n");
      done();
      return PolyOperator::khessian(k, n);
    }
    if (name == "pfold") {
      const int p = take("p");
      const int n = take("n");
      done();
      return PolyOperator::pfold(p, n);
    }
    if (name == "trace") {
      const int n = take("n");
      done();
      return PolyOperator::trace(n);
    }
    if (name == "normsqdet") {
      const int n = take("n");
      done();
      return PolyOperator::normsqdet(n);
    }
    fail("unknown operator '" + name + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

PolyOperator parse_operator(const std::string& spec) { return Parser(spec).parse(); }

}  // namespace abplab
