use super::{Formula, Term};
use crate::error::{Error, Result};

/// `E_n(x; y)` becomes `f_n(x) = f_n(y)`; quantifiers range over `S`.
pub fn translate_le_to_lstar(f: &Formula) -> Result<Formula> {
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Eq(a, b) => match (a, b) {
            (Term::Var(_), Term::Var(_)) => f.clone(),
            _ => return Err(Error::Dialect(format!("`{f}` is not an LE formula"))),
        },
        Formula::E(x, y) => Formula::Eq(Term::Fun(x.len(), x.clone()), Term::Fun(y.len(), y.clone())),
        Formula::Not(a) => translate_le_to_lstar(a)?.not(),
        Formula::And(a, b) => translate_le_to_lstar(a)?.and(translate_le_to_lstar(b)?),
        Formula::Or(a, b) => translate_le_to_lstar(a)?.or(translate_le_to_lstar(b)?),
        Formula::Implies(a, b) => translate_le_to_lstar(a)?.implies(translate_le_to_lstar(b)?),
        Formula::Exists(v, 0, a) => Formula::Exists(v.clone(), 0, Box::new(translate_le_to_lstar(a)?)),
        Formula::Forall(v, 0, a) => Formula::Forall(v.clone(), 0, Box::new(translate_le_to_lstar(a)?)),
        Formula::Exists(..) | Formula::Forall(..) => return Err(Error::Dialect("sorted quantifier in an LE formula".into())),
    })
}

/// Some two entries of `x` coincide.
fn has_repeat(x: &[String]) -> Formula {
    let mut parts = vec![];
    for l in 0..x.len() {
        for k in 0..l {
            parts.push(Formula::var_eq(&x[k], &x[l]));
        }
    }
    Formula::disj(parts)
}

/// Rewrites atoms between `S`-variables, `f_n` of `S`-variables and `c_n`.
/// Variables are taken to be of sort `S`.
pub fn translate_lstar_to_le(f: &Formula) -> Result<Formula> {
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::E(..) => return Err(Error::Dialect(format!("`{f}` is not an LSTAR formula"))),
        Formula::Eq(a, b) => match (a, b) {
            (Term::Var(_), Term::Var(_)) => f.clone(),
            (Term::Fun(n, x), Term::Fun(m, y)) if n == m => Formula::E(x.clone(), y.clone()),
            (Term::Fun(n, x), Term::Const(m)) | (Term::Const(m), Term::Fun(n, x)) if n == m => has_repeat(x),
            (Term::Const(n), Term::Const(m)) if n == m => Formula::True,
            _ => return Err(Error::UnsupportedShape(format!("`{f}` compares terms outside the rewrite rules"))),
        },
        Formula::Not(a) => translate_lstar_to_le(a)?.not(),
        Formula::And(a, b) => translate_lstar_to_le(a)?.and(translate_lstar_to_le(b)?),
        Formula::Or(a, b) => translate_lstar_to_le(a)?.or(translate_lstar_to_le(b)?),
        Formula::Implies(a, b) => translate_lstar_to_le(a)?.implies(translate_lstar_to_le(b)?),
        Formula::Exists(..) | Formula::Forall(..) => {
            return Err(Error::UnsupportedShape("quantifiers are not translated back".into()))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{evaluate, parse_formula, Assignment, Dialect};
    use crate::structure::Elem;
    use crate::te::to_tstar;

    #[test]
    fn e_atom_to_term_equation() {
        let f = parse_formula("E2(x,y;u,v)", Dialect::Le).unwrap();
        let g = parse_formula("f2(x,y) = f2(u,v)", Dialect::LStar).unwrap();
        assert_eq!(translate_le_to_lstar(&f).unwrap(), g);
        assert_eq!(translate_lstar_to_le(&g).unwrap(), f);
    }

    #[test]
    fn constant_means_repetition() {
        let g = parse_formula("f2(x,y) = c2", Dialect::LStar).unwrap();
        assert_eq!(translate_lstar_to_le(&g).unwrap(), Formula::var_eq("x", "y"));
        let g1 = parse_formula("f1(x) = c1", Dialect::LStar).unwrap();
        assert_eq!(translate_lstar_to_le(&g1).unwrap(), Formula::False);
    }

    #[test]
    fn equality_is_fixed() {
        let f = parse_formula("(x = y | !(y = z))", Dialect::Le).unwrap();
        assert_eq!(translate_le_to_lstar(&f).unwrap(), f);
        assert_eq!(translate_lstar_to_le(&f).unwrap(), f);
    }

    #[test]
    fn nested_terms_are_rejected() {
        let g = parse_formula("f1(x) = y:S1", Dialect::LStar).unwrap();
        assert!(matches!(translate_lstar_to_le(&g), Err(Error::UnsupportedShape(_))));
    }

    #[test]
    fn sentences_agree_across_the_translation() {
        let f = parse_formula("forall x. exists y. (!(x = y) & E2(x,y;y,x))", Dialect::Le).unwrap();
        let g = translate_le_to_lstar(&f).unwrap();
        for s in crate::te::class::all_te(3, 2).into_iter().step_by(37) {
            let a = evaluate(&s, &f, &Assignment::new()).unwrap();
            let b = evaluate(&to_tstar(&s), &g, &Assignment::<Elem>::new()).unwrap();
            assert_eq!(a, b);
        }
    }
}
