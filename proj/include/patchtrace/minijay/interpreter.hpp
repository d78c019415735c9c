#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "patchtrace/core/model.hpp"
#include "patchtrace/minijay/loader.hpp"
#include "patchtrace/minijay/trace_sink.hpp"

namespace patchtrace::minijay {

using Clock = std::function<std::int64_t()>;

inline Clock system_clock()
{
    return [] {
        return static_cast<std::int64_t>(std::chrono::duration_cast<std::chrono::seconds>(
                                             std::chrono::system_clock::now().time_since_epoch())
                                             .count());
    };
}

enum class TraceMode { off, dynamic };

struct RunOptions {
    AppId app;
    TraceMode mode = TraceMode::off;
    std::string run_id = "run-0";
    Clock clock = system_clock();
    int max_call_depth = 200;
};

struct RunResult {
    std::string output;     // everything `print` wrote
    int exit_status = 0;    // entry's return value when it is an integer
    std::vector<TraceRecord> traces;  // first-invocation records, entry order
    std::vector<std::string> entered; // every construct entry, duplicates kept
    bool sink_spilled = false;
};

namespace detail {

struct ObjectInstance;
using ObjectPtr = std::shared_ptr<ObjectInstance>;

using Value = std::variant<std::monostate, bool, std::int64_t, std::string, ObjectPtr>;

struct ObjectInstance {
    const ClassInfo* cls = nullptr;
    std::map<std::string, Value> fields;
    int id = 0;
};

[[noreturn]] inline void runtime_fail(const std::string& message, std::uint32_t line)
{
    raise(ErrorKind::runtime_error, message + " (line " + std::to_string(line) + ")");
}

inline std::string type_name(const Value& v)
{
    switch (v.index()) {
    case 0: return "nil";
    case 1: return "bool";
    case 2: return "int";
    case 3: return "string";
    default: return "object";
    }
}

class Interpreter {
public:
    Interpreter(const ProgramBundle& bundle, const RunOptions& options, TraceSink* sink)
        : bundle_(bundle), options_(options), sink_(sink)
    {}

    RunResult run(const LoadedConstruct& entry)
    {
        Value result = call_construct(entry, nullptr, {}, 0, 0);
        if (sink_)
            sink_->flush();

        RunResult out;
        out.output = std::move(output_);
        out.traces = std::move(emitted_);
        out.entered = std::move(entered_);
        if (auto* code = std::get_if<std::int64_t>(&result))
            out.exit_status = static_cast<int>(*code & 0xff);
        out.sink_spilled = sink_ && sink_->spilled();
        return out;
    }

private:
    struct Frame {
        std::vector<std::map<std::string, Value>> scopes; // innermost last
        ObjectPtr receiver;
        std::string package; // of the construct being executed

        Value* find(const std::string& name)
        {
            for (auto scope = scopes.rbegin(); scope != scopes.rend(); ++scope) {
                auto it = scope->find(name);
                if (it != scope->end())
                    return &it->second;
            }
            return nullptr;
        }
    };

    struct Flow {
        bool returned = false;
        Value value;
    };

    const ProgramBundle& bundle_;
    const RunOptions& options_;
    TraceSink* sink_;
    std::set<std::string> seen_;
    std::vector<TraceRecord> emitted_;
    std::vector<std::string> entered_;
    std::string output_;
    int next_object_id_ = 1;

    // --- tracing ------------------------------------------------------------

    std::optional<std::string> origin_digest(int origin) const
    {
        if (origin == kAppOrigin)
            return std::nullopt;
        return bundle_.archives[static_cast<std::size_t>(origin)].digest;
    }

    void trace_first(const std::string& rendered, std::optional<std::string> digest,
                     std::uint32_t line)
    {
        if (!seen_.insert(rendered).second)
            return;
        TraceRecord record;
        record.app = options_.app;
        try {
            record.signature = parse_signature(rendered);
        } catch (const Error& e) {
            runtime_fail("__trace expects a canonical signature: " + e.message(), line);
        }
        record.digest = std::move(digest);
        record.first_seen = options_.clock();
        record.run_id = options_.run_id;
        emitted_.push_back(record);
        if (sink_)
            sink_->emit(record);
    }

    // --- construct invocation -----------------------------------------------

    Value call_construct(const LoadedConstruct& construct, ObjectPtr receiver,
                         std::vector<Value> args, int depth, std::uint32_t line)
    {
        if (depth > options_.max_call_depth)
            runtime_fail("call depth exceeded in '" + construct.rendered + "'", line);
        entered_.push_back(construct.rendered);
        if (options_.mode == TraceMode::dynamic)
            trace_first(construct.rendered, origin_digest(construct.origin), line);

        Frame frame;
        frame.receiver = std::move(receiver);
        frame.package = construct.signature.package;
        frame.scopes.emplace_back();
        const auto& params = construct.decl->params;
        for (std::size_t i = 0; i < params.size(); ++i)
            frame.scopes.back()[params[i]] = std::move(args[i]);

        Flow flow = exec_block(construct.decl->body, frame, depth);
        return flow.returned ? std::move(flow.value) : Value{};
    }

    ObjectPtr instantiate(const ClassInfo& cls, std::vector<Value> args, int depth,
                          std::uint32_t line)
    {
        auto object = std::make_shared<ObjectInstance>();
        object->cls = &cls;
        object->id = next_object_id_++;
        for (const FieldDecl* field : cls.fields)
            object->fields[field->name] = Value{};
        for (const FieldDecl* field : cls.fields) {
            if (field->init) {
                Frame frame;
                frame.receiver = object;
                frame.package = cls.package;
                frame.scopes.emplace_back();
                object->fields[field->name] = eval(*field->init, frame, depth);
            }
        }

        auto ctor = cls.ctors.find(static_cast<int>(args.size()));
        if (ctor != cls.ctors.end()) {
            call_construct(*ctor->second, object, std::move(args), depth + 1, line);
        } else if (!args.empty() || !cls.ctors.empty()) {
            runtime_fail("class '" + cls.qualified + "' has no constructor taking "
                             + std::to_string(args.size()) + " arguments",
                         line);
        }
        return object;
    }

    // --- statements -----------------------------------------------------------

    // Each block is a scope; loop bodies get a fresh one per iteration.
    Flow exec_block(const Block& block, Frame& frame, int depth)
    {
        frame.scopes.emplace_back();
        Flow flow;
        for (const auto& stmt : block.statements) {
            flow = exec(*stmt, frame, depth);
            if (flow.returned)
                break;
        }
        frame.scopes.pop_back();
        return flow;
    }

    Flow exec(const Stmt& stmt, Frame& frame, int depth)
    {
        switch (stmt.kind) {
        case Stmt::Kind::var_decl: {
            if (frame.scopes.back().count(stmt.var_name))
                runtime_fail("variable '" + stmt.var_name + "' is already declared", stmt.line);
            Value value = stmt.value ? eval(*stmt.value, frame, depth) : Value{};
            frame.scopes.back()[stmt.var_name] = std::move(value);
            return {};
        }
        case Stmt::Kind::assign: {
            assign(stmt, frame, depth);
            return {};
        }
        case Stmt::Kind::if_stmt: {
            if (truth(eval(*stmt.value, frame, depth), stmt.line))
                return exec_block(stmt.body, frame, depth);
            if (stmt.has_else)
                return exec_block(stmt.else_body, frame, depth);
            return {};
        }
        case Stmt::Kind::while_stmt: {
            while (truth(eval(*stmt.value, frame, depth), stmt.line)) {
                Flow flow = exec_block(stmt.body, frame, depth);
                if (flow.returned)
                    return flow;
            }
            return {};
        }
        case Stmt::Kind::return_stmt: {
            Flow flow;
            flow.returned = true;
            if (stmt.value)
                flow.value = eval(*stmt.value, frame, depth);
            return flow;
        }
        case Stmt::Kind::expr_stmt: {
            eval(*stmt.value, frame, depth);
            return {};
        }
        }
        return {};
    }

    void assign(const Stmt& stmt, Frame& frame, int depth)
    {
        Value value = eval(*stmt.value, frame, depth);
        const auto& target = stmt.target;

        if (target.size() == 1) {
            if (Value* local = frame.find(target[0])) {
                *local = std::move(value);
                return;
            }
            if (frame.receiver) {
                auto field = frame.receiver->fields.find(target[0]);
                if (field != frame.receiver->fields.end()) {
                    field->second = std::move(value);
                    return;
                }
            }
            runtime_fail("cannot assign to undeclared name '" + target[0] + "'", stmt.line);
        }

        Value object = resolve_name(frame, target[0], stmt.line);
        for (std::size_t i = 1; i + 1 < target.size(); ++i)
            object = field_get(object, target[i], stmt.line);
        ObjectPtr* receiver = std::get_if<ObjectPtr>(&object);
        if (!receiver)
            runtime_fail("cannot set field '" + target.back() + "' on a "
                             + type_name(object) + " value",
                         stmt.line);
        auto field = (*receiver)->fields.find(target.back());
        if (field == (*receiver)->fields.end())
            runtime_fail("class '" + (*receiver)->cls->qualified + "' has no field '"
                             + target.back() + "'",
                         stmt.line);
        field->second = std::move(value);
    }

    // --- expressions ----------------------------------------------------------

    Value eval(const Expr& expr, Frame& frame, int depth)
    {
        switch (expr.kind) {
        case Expr::Kind::int_lit: return expr.int_value;
        case Expr::Kind::str_lit: return expr.str_value;
        case Expr::Kind::bool_lit: return expr.bool_value;
        case Expr::Kind::nil_lit: return Value{};
        case Expr::Kind::name: return eval_path(expr, frame, expr.line);
        case Expr::Kind::field_get:
            return field_get(eval(*expr.object, frame, depth), expr.field, expr.line);
        case Expr::Kind::call: return eval_call(expr, frame, depth);
        case Expr::Kind::make: return eval_make(expr, frame, depth);
        case Expr::Kind::binary: return eval_binary(expr, frame, depth);
        case Expr::Kind::unary: return eval_unary(expr, frame, depth);
        }
        return Value{};
    }

    Value eval_path(const Expr& expr, Frame& frame, std::uint32_t line)
    {
        Value value = resolve_name(frame, expr.path[0], line);
        for (std::size_t i = 1; i < expr.path.size(); ++i)
            value = field_get(value, expr.path[i], line);
        return value;
    }

    Value resolve_name(Frame& frame, const std::string& name, std::uint32_t line)
    {
        if (const Value* local = frame.find(name))
            return *local;
        if (frame.receiver) {
            auto field = frame.receiver->fields.find(name);
            if (field != frame.receiver->fields.end())
                return field->second;
        }
        runtime_fail("undefined name '" + name + "'", line);
    }

    bool name_resolvable(Frame& frame, const std::string& name) const
    {
        if (frame.find(name))
            return true;
        return frame.receiver && frame.receiver->fields.count(name) != 0;
    }

    Value field_get(const Value& value, const std::string& field, std::uint32_t line)
    {
        const ObjectPtr* object = std::get_if<ObjectPtr>(&value);
        if (!object)
            runtime_fail("cannot read field '" + field + "' of a " + type_name(value) + " value",
                         line);
        auto it = (*object)->fields.find(field);
        if (it == (*object)->fields.end())
            runtime_fail("class '" + (*object)->cls->qualified + "' has no field '" + field + "'",
                         line);
        return it->second;
    }

    Value eval_call(const Expr& expr, Frame& frame, int depth)
    {
        std::vector<Value> args;

        const Expr& callee = *expr.callee;
        if (callee.kind == Expr::Kind::name) {
            const auto& path = callee.path;
            if (path.size() == 1) {
                // builtin -> same-package function -> unqualified function
                if (path[0] == "print") {
                    eval_args(expr, frame, depth, args);
                    if (args.size() != 1)
                        runtime_fail("print takes exactly one argument", expr.line);
                    output_ += render(args[0]);
                    output_ += '\n';
                    return Value{};
                }
                if (path[0] == "__trace") {
                    eval_args(expr, frame, depth, args);
                    if (args.size() != 2)
                        runtime_fail("__trace takes a signature and a digest", expr.line);
                    const std::string* sig = std::get_if<std::string>(&args[0]);
                    const std::string* digest = std::get_if<std::string>(&args[1]);
                    if (!sig || !digest)
                        runtime_fail("__trace takes two strings", expr.line);
                    trace_first(*sig,
                                digest->empty() ? std::nullopt
                                                : std::optional<std::string>(*digest),
                                expr.line);
                    return Value{};
                }
            }

            // A leading local/field chain is a receiver; otherwise the path is
            // a package-qualified function name.
            if (path.size() > 1 && name_resolvable(frame, path[0])) {
                Value receiver_value = resolve_name(frame, path[0], expr.line);
                for (std::size_t i = 1; i + 1 < path.size(); ++i)
                    receiver_value = field_get(receiver_value, path[i], expr.line);
                eval_args(expr, frame, depth, args);
                return call_method(receiver_value, path.back(), std::move(args), depth,
                                   expr.line);
            }

            eval_args(expr, frame, depth, args);
            return call_function(path, std::move(args), frame, depth, expr.line);
        }

        if (callee.kind == Expr::Kind::field_get) {
            Value receiver_value = eval(*callee.object, frame, depth);
            eval_args(expr, frame, depth, args);
            return call_method(receiver_value, callee.field, std::move(args), depth, expr.line);
        }

        runtime_fail("expression is not callable", expr.line);
    }

    void eval_args(const Expr& expr, Frame& frame, int depth, std::vector<Value>& args)
    {
        args.reserve(expr.args.size());
        for (const auto& arg : expr.args)
            args.push_back(eval(*arg, frame, depth));
    }

    Value call_function(const std::vector<std::string>& path, std::vector<Value> args,
                        Frame& frame, int depth, std::uint32_t line)
    {
        std::string qualified;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            qualified += path[i];
            qualified += '.';
        }
        qualified += path.back();

        int arity = static_cast<int>(args.size());
        if (path.size() == 1 && !frame.package.empty()) {
            auto in_package = bundle_.functions.find(
                std::make_pair(frame.package + "." + path[0], arity));
            if (in_package != bundle_.functions.end())
                return call_construct(*in_package->second, nullptr, std::move(args),
                                      depth + 1, line);
        }
        auto found = bundle_.functions.find(std::make_pair(qualified, arity));
        if (found == bundle_.functions.end())
            runtime_fail("undefined function '" + qualified + "/" + std::to_string(arity) + "'",
                         line);
        return call_construct(*found->second, nullptr, std::move(args), depth + 1, line);
    }

    Value call_method(Value& receiver_value, const std::string& name, std::vector<Value> args,
                      int depth, std::uint32_t line)
    {
        ObjectPtr* receiver = std::get_if<ObjectPtr>(&receiver_value);
        if (!receiver)
            runtime_fail("cannot call '" + name + "' on a " + type_name(receiver_value)
                             + " value",
                         line);
        const ClassInfo* cls = (*receiver)->cls;
        auto method = cls->methods.find(std::make_pair(name, static_cast<int>(args.size())));
        if (method == cls->methods.end())
            runtime_fail("class '" + cls->qualified + "' has no method '" + name + "/"
                             + std::to_string(args.size()) + "'",
                         line);
        return call_construct(*method->second, *receiver, std::move(args), depth + 1, line);
    }

    Value eval_make(const Expr& expr, Frame& frame, int depth)
    {
        std::string qualified;
        for (std::size_t i = 0; i < expr.path.size(); ++i) {
            if (i)
                qualified += '.';
            qualified += expr.path[i];
        }
        auto cls = bundle_.classes.find(qualified);
        if (cls == bundle_.classes.end())
            runtime_fail("unknown class '" + qualified + "'", expr.line);
        std::vector<Value> args;
        eval_args(expr, frame, depth, args);
        return instantiate(cls->second, std::move(args), depth, expr.line);
    }

    Value eval_binary(const Expr& expr, Frame& frame, int depth)
    {
        if (expr.bin_op == BinaryOp::logic_and || expr.bin_op == BinaryOp::logic_or) {
            bool lhs = truth(eval(*expr.lhs, frame, depth), expr.line);
            if (expr.bin_op == BinaryOp::logic_and && !lhs)
                return false;
            if (expr.bin_op == BinaryOp::logic_or && lhs)
                return true;
            return truth(eval(*expr.rhs, frame, depth), expr.line);
        }

        Value lhs = eval(*expr.lhs, frame, depth);
        Value rhs = eval(*expr.rhs, frame, depth);

        if (expr.bin_op == BinaryOp::eq || expr.bin_op == BinaryOp::ne) {
            bool equal = values_equal(lhs, rhs);
            return expr.bin_op == BinaryOp::eq ? equal : !equal;
        }

        if (expr.bin_op == BinaryOp::add) {
            if (lhs.index() == 3 && rhs.index() == 3)
                return std::get<std::string>(lhs) + std::get<std::string>(rhs);
        }

        const std::int64_t* a = std::get_if<std::int64_t>(&lhs);
        const std::int64_t* b = std::get_if<std::int64_t>(&rhs);
        if (!a || !b)
            runtime_fail(std::string("operands of '") + op_text(expr.bin_op) + "' must be "
                             + (expr.bin_op == BinaryOp::add ? "two ints or two strings"
                                                             : "ints"),
                         expr.line);

        auto wrap = [](std::uint64_t v) { return static_cast<std::int64_t>(v); };
        switch (expr.bin_op) {
        case BinaryOp::add:
            return wrap(static_cast<std::uint64_t>(*a) + static_cast<std::uint64_t>(*b));
        case BinaryOp::sub:
            return wrap(static_cast<std::uint64_t>(*a) - static_cast<std::uint64_t>(*b));
        case BinaryOp::mul:
            return wrap(static_cast<std::uint64_t>(*a) * static_cast<std::uint64_t>(*b));
        case BinaryOp::div:
            if (*b == 0)
                runtime_fail("division by zero", expr.line);
            if (*b == -1)
                return wrap(~static_cast<std::uint64_t>(*a) + 1);
            return *a / *b;
        case BinaryOp::lt: return *a < *b;
        case BinaryOp::le: return *a <= *b;
        case BinaryOp::gt: return *a > *b;
        case BinaryOp::ge: return *a >= *b;
        default: break;
        }
        return Value{};
    }

    Value eval_unary(const Expr& expr, Frame& frame, int depth)
    {
        Value operand = eval(*expr.operand, frame, depth);
        if (expr.un_op == UnaryOp::logic_not) {
            if (operand.index() != 1)
                runtime_fail("operand of '!' must be a bool", expr.line);
            return !std::get<bool>(operand);
        }
        const std::int64_t* value = std::get_if<std::int64_t>(&operand);
        if (!value)
            runtime_fail("operand of unary '-' must be an int", expr.line);
        return static_cast<std::int64_t>(~static_cast<std::uint64_t>(*value) + 1);
    }

    // --- helpers --------------------------------------------------------------

    bool truth(const Value& value, std::uint32_t line)
    {
        if (value.index() != 1)
            runtime_fail("condition must be a bool, got " + type_name(value), line);
        return std::get<bool>(value);
    }

    static bool values_equal(const Value& a, const Value& b)
    {
        if (a.index() != b.index())
            return false;
        switch (a.index()) {
        case 0: return true;
        case 1: return std::get<bool>(a) == std::get<bool>(b);
        case 2: return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
        case 3: return std::get<std::string>(a) == std::get<std::string>(b);
        default: return std::get<ObjectPtr>(a).get() == std::get<ObjectPtr>(b).get();
        }
    }

    std::string render(const Value& value)
    {
        switch (value.index()) {
        case 0: return "nil";
        case 1: return std::get<bool>(value) ? "true" : "false";
        case 2: return std::to_string(std::get<std::int64_t>(value));
        case 3: return std::get<std::string>(value);
        default: {
            const ObjectPtr& object = std::get<ObjectPtr>(value);
            return "<" + object->cls->qualified + "#" + std::to_string(object->id) + ">";
        }
        }
    }

    static const char* op_text(BinaryOp op)
    {
        switch (op) {
        case BinaryOp::add: return "+";
        case BinaryOp::sub: return "-";
        case BinaryOp::mul: return "*";
        case BinaryOp::div: return "/";
        case BinaryOp::lt: return "<";
        case BinaryOp::le: return "<=";
        case BinaryOp::gt: return ">";
        case BinaryOp::ge: return ">=";
        case BinaryOp::eq: return "==";
        case BinaryOp::ne: return "!=";
        case BinaryOp::logic_and: return "&&";
        case BinaryOp::logic_or: return "||";
        }
        return "?";
    }

};

} // namespace detail

// Looks up the entry construct; it must be an application FUNC of arity 0.
inline const LoadedConstruct& find_entry(const ProgramBundle& bundle,
                                         const ConstructSignature& entry)
{
    std::string rendered = render_signature(entry);
    auto it = bundle.constructs.find(rendered);
    if (it == bundle.constructs.end() || it->second.origin != kAppOrigin)
        raise(ErrorKind::unknown_entry,
              "entry '" + rendered + "' is not a construct of the application sources");
    if (it->second.signature.kind != ConstructKind::func || it->second.signature.arity != 0)
        raise(ErrorKind::unknown_entry,
              "entry '" + rendered + "' must be a function of arity 0");
    return it->second;
}

inline RunResult run_program(const ProgramBundle& bundle, const ConstructSignature& entry,
                             const RunOptions& options, TraceSink* sink = nullptr)
{
    const LoadedConstruct& entry_construct = find_entry(bundle, entry);
    detail::Interpreter interpreter(bundle, options, sink);
    return interpreter.run(entry_construct);
}

} // namespace patchtrace::minijay
