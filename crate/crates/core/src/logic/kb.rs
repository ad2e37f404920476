use std::collections::HashMap;

use super::parser::{lex, validate, Parser};
use super::{Formula, LogicError, LogicErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedFormula {
    pub formula: Formula,
    pub weight: f64,
    /// 1-based line in the source file.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnowledgeBase {
    pub formulas: Vec<WeightedFormula>,
    /// Predicates in order of first appearance, with their arity.
    pub signature: Vec<(String, usize)>,
}

impl KnowledgeBase {
    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn arity(&self, predicate: &str) -> Option<usize> {
        self.signature.iter().find(|(p, _)| p == predicate).map(|&(_, n)| n)
    }

    /// Builds a knowledge base from already parsed formulas, checking arity
    /// consistency across them.
    pub fn from_formulas(items: Vec<(Formula, f64)>) -> Result<Self, LogicError> {
        let mut kb = KnowledgeBase::default();
        let mut arities = HashMap::new();
        for (i, (formula, weight)) in items.into_iter().enumerate() {
            check_weight(weight, i + 1, 1)?;
            validate(&formula, &mut arities, i + 1, 1)?;
            kb.note_signature(&formula);
            kb.formulas.push(WeightedFormula { formula, weight, line: i + 1 });
        }
        Ok(kb)
    }

    fn note_signature(&mut self, f: &Formula) {
        for atom in f.atoms() {
            if self.arity(&atom.predicate).is_none() {
                self.signature.push((atom.predicate.clone(), atom.args.len()));
            }
        }
    }
}

fn check_weight(w: f64, line: usize, col: usize) -> Result<(), LogicError> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        Err(LogicError::new(
            LogicErrorKind::Weight,
            line,
            col,
            format!("formula weight must be positive and finite, got {}", w),
        ))
    }
}

/// Parses a `.dfl` file: one `[weight] formula` per line, `#` starts a
/// comment, blank lines are ignored.
pub fn parse_kb(text: &str) -> Result<KnowledgeBase, LogicError> {
    let mut kb = KnowledgeBase::default();
    let mut arities = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let mut p = Parser::new(lex(content, line)?);
        let mut weight = 1.0;
        if let Some(w) = p.at_number() {
            let (l, c) = p.position();
            check_weight(w, l, c)?;
            weight = w;
            p.skip();
        }
        let (l, c) = p.position();
        let formula = p.formula()?;
        p.finish()?;
        validate(&formula, &mut arities, l, c)?;
        kb.note_signature(&formula);
        kb.formulas.push(WeightedFormula { formula, weight, line });
    }
    Ok(kb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_and_comments() {
        let kb = parse_kb("# header\n1.0 forall x: p(x)\n\n10 forall x: p(x) -> q(x)  # trailing\n").unwrap();
        assert_eq!(kb.len(), 2);
        assert_eq!(kb.formulas[1].weight, 10.0);
        assert_eq!(kb.formulas[1].line, 4);
        assert_eq!(kb.signature, vec![("p".to_string(), 1), ("q".to_string(), 1)]);
        let kb = parse_kb("forall x: p(x)").unwrap();
        assert_eq!(kb.formulas[0].weight, 1.0);
    }

    #[test]
    fn rejects_bad_lines() {
        let e = parse_kb("forall x, y: p(x, y)\nforall x: p(x)\n").unwrap_err();
        assert_eq!((e.kind, e.line), (LogicErrorKind::Arity, 2));
        assert_eq!(parse_kb("-1 forall x: p(x)").unwrap_err().kind, LogicErrorKind::Weight);
        assert_eq!(parse_kb("0 forall x: p(x)").unwrap_err().kind, LogicErrorKind::Weight);
        let e = parse_kb("forall x: p(x)\nforall x: p(x) &&").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn digit_recognition_kb() {
        let digits = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"];
        let mut text = String::new();
        for d in digits {
            text.push_str(&format!("forall x, y: {d}(x) & {d}(y) -> same(x, y)\n"));
        }
        for d in digits {
            text.push_str(&format!("forall x, y: {d}(x) & same(x, y) -> {d}(y)\n"));
        }
        text.push_str("forall x, y: same(x, y) -> same(y, x)\n");
        let kb = parse_kb(&text).unwrap();
        assert_eq!(kb.len(), 21);
        assert_eq!(kb.arity("same"), Some(2));
    }
}
