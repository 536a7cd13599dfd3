use proptest::prelude::*;
use rotset_core::dsl::{eval_expr, parse_expr, parse_map, Params};
use rotset_core::lift::translate_commutation_check;
use rotset_core::LiftMap;

/// Reference evaluator working directly on the source text, written
/// independently of the library parser (no AST, no shared lexer).
struct Reference<'a> {
    src: &'a [u8],
    pos: usize,
    x: f64,
    y: f64,
    a: f64,
}

impl Reference<'_> {
    fn skip(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos] == b' ' {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) {
        assert_eq!(self.peek(), Some(c));
        self.pos += 1;
    }

    fn expr(&mut self) -> f64 {
        let mut v = self.term();
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let r = self.term();
            v = if c == b'+' { v + r } else { v - r };
        }
        v
    }

    fn term(&mut self) -> f64 {
        let mut v = self.unary();
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let r = self.unary();
            v = if c == b'*' { v * r } else { v / r };
        }
        v
    }

    fn unary(&mut self) -> f64 {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return -self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> f64 {
        let c = self.peek().expect("unexpected end");
        if c == b'(' {
            self.pos += 1;
            let v = self.expr();
            self.eat(b')');
            return v;
        }
        if c.is_ascii_digit() || c == b'.' {
            let start = self.pos;
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
            {
                self.pos += 1;
            }
            return std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .unwrap();
        }
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        match &self.src[start..self.pos] {
            b"x" => self.x,
            b"y" => self.y,
            b"a" => self.a,
            b"pi" => std::f64::consts::PI,
            f @ (b"sin" | b"cos") => {
                let is_sin = f == b"sin";
                self.eat(b'(');
                let v = self.expr();
                self.eat(b')');
                if is_sin {
                    v.sin()
                } else {
                    v.cos()
                }
            }
            other => panic!("unknown identifier {:?}", String::from_utf8_lossy(other)),
        }
    }
}

fn reference_eval(src: &str, x: f64, y: f64, a: f64) -> f64 {
    let mut r = Reference {
        src: src.as_bytes(),
        pos: 0,
        x,
        y,
        a,
    };
    let v = r.expr();
    assert_eq!(r.peek(), None, "trailing input in {src}");
    v
}

/// Random sources with minimal parenthesization, so precedence matters.
fn source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (1u32..100).prop_map(|n| format!("{}", n as f64 / 8.0)),
        Just("x".to_string()),
        Just("y".to_string()),
        Just("pi".to_string()),
        Just("a".to_string()),
    ];
    leaf.prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            (
                inner.clone(),
                prop::sample::select(vec!["+", "-", "*", "/"]),
                inner.clone()
            )
                .prop_map(|(l, op, r)| format!("{l} {op} {r}")),
            inner.clone().prop_map(|e| format!("-{e}")),
            inner.clone().prop_map(|e| format!("({e})")),
            (prop::sample::select(vec!["sin", "cos"]), inner)
                .prop_map(|(f, e)| format!("{f}({e})")),
        ]
    })
}

fn params(a: f64) -> Params {
    Params::from([("a".to_string(), a)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn ast_matches_reference_evaluator(src in source(), x in -2.0..2.0f64, y in -2.0..2.0f64, a in -1.0..1.0f64) {
        let expected = reference_eval(&src, x, y, a);
        prop_assume!(expected.is_finite());
        let ast = parse_expr(&src).unwrap();
        let got = eval_expr(&ast, x, y, &params(a)).unwrap();
        prop_assert!((got - expected).abs() <= 1e-15 * expected.abs().max(1.0), "{src}: {got} vs {expected}");
    }

    #[test]
    fn print_parse_fixpoint(src in source()) {
        let ast = parse_expr(&src).unwrap();
        let printed = ast.to_string();
        let again = parse_expr(&printed).unwrap();
        prop_assert_eq!(&again, &ast);
        prop_assert_eq!(again.to_string(), printed);
    }

    #[test]
    fn map_definition_display_round_trips(sx in source(), sy in source(), a in -1.0..1.0f64) {
        let src = format!("{sx} ; {sy} where a={a:?}");
        let def = parse_map(&src).unwrap();
        let again = parse_map(&def.to_string()).unwrap();
        prop_assert_eq!(again, def);
    }

    #[test]
    fn trigonometric_maps_are_lifts(c1 in -1.0..1.0f64, c2 in -1.0..1.0f64, k in 1u32..4) {
        let src = format!("x + {c1:?}*sin({k}*2*pi*y) ; y + {c2:?}*cos(2*pi*(x + y))");
        let map = LiftMap::from_definition(parse_map(&src).unwrap()).unwrap();
        prop_assert!(translate_commutation_check(&map, 200, 1).unwrap() <= 1e-9);
    }
}

#[test]
fn accepted_definitions_satisfy_lift_invariant() {
    for src in [
        "x ; y",
        "x + 0.3 ; y + 0.7",
        "x + b*sin(2*pi*(y + a*sin(2*pi*x))) ; y + a*sin(2*pi*x) where a=0.5, b=0.5",
        "x + 0.1*cos(2*pi*y)*sin(2*pi*y) ; y - 0.2*sin(2*pi*x)",
    ] {
        let map = LiftMap::from_definition(parse_map(src).unwrap()).unwrap();
        assert!(
            translate_commutation_check(&map, 1000, 9).unwrap() <= 1e-9,
            "{src}"
        );
    }
}

#[test]
fn non_lifts_are_rejected() {
    let def = parse_map("x + sin(pi*x) ; y").unwrap();
    assert!(LiftMap::from_definition(def.clone()).is_err());
    let err =
        translate_commutation_check(&LiftMap::from_definition_unchecked(def), 1000, 1).unwrap();
    assert!(err > 0.1);
}
