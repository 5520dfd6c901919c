//! Block-triangular ("canonical-type") polynomial self-maps of R^h.
//!
//! Coordinates are grouped into consecutive levels. A map is canonical when the
//! output block of level `i` is `D_i x_i + q_i(x_1, ..., x_{i-1})`: linear in its
//! own block and polynomial in strictly lower blocks. Both group elements and
//! homotopy lifts are represented this way, so group arithmetic is composition.
//!
//! Levels are numbered from 1 in every public signature and report.

use std::fmt;
use std::ops::Range;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::exactla::{IntegerMatrix, RationalMatrix};
use crate::qpoly::{self, MultiPoly, QPolyError, Rat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CanonicalError {
    #[error("filtrations differ: {left:?} against {right:?}")]
    FiltrationMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("filtration block dimensions must be positive and nonempty")]
    BadFiltration,
    #[error("diagonal block at level {level} is singular")]
    NotInvertible { level: usize },
    #[error("level {level}: {reason}")]
    Shape { level: usize, reason: String },
    #[error("point has {found} coordinates, expected {expected}")]
    PointDimension { expected: usize, found: usize },
    #[error(transparent)]
    Poly(#[from] QPolyError),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Filtration {
    block_dims: Vec<usize>,
    starts: Vec<usize>,
}

impl Filtration {
    pub fn new(block_dims: Vec<usize>) -> Result<Self, CanonicalError> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(CanonicalError::BadFiltration);
        }
        let mut starts = Vec::with_capacity(block_dims.len());
        let mut acc = 0;
        for &d in &block_dims {
            starts.push(acc);
            acc += d;
        }
        Ok(Filtration { block_dims, starts })
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn num_levels(&self) -> usize {
        self.block_dims.len()
    }

    /// Total dimension `h`.
    pub fn dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn level_dim(&self, level: usize) -> usize {
        self.block_dims[level - 1]
    }

    /// Coordinate indices (0-based) of the given level.
    pub fn range(&self, level: usize) -> Range<usize> {
        let s = self.starts[level - 1];
        s..s + self.block_dims[level - 1]
    }

    /// Number of coordinates strictly below the given level, `K_{i-1}`.
    pub fn offset(&self, level: usize) -> usize {
        self.starts[level - 1]
    }

    pub fn levels(&self) -> impl Iterator<Item = usize> {
        1..=self.block_dims.len()
    }

    /// Level (1-based) containing coordinate `var` (0-based).
    pub fn level_of(&self, var: usize) -> usize {
        self.starts.iter().rposition(|&s| s <= var).expect("coordinate in range") + 1
    }
}

/// Why a map fails to be canonical. Levels and variables are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("level {level}: output coordinate {coordinate} depends on x{variable} from a deeper level")]
    DeeperDependence {
        level: usize,
        coordinate: usize,
        variable: usize,
    },
    #[error("level {level}: output coordinate {coordinate} is not linear in its own block (variable x{variable})")]
    NonlinearOwnBlock {
        level: usize,
        coordinate: usize,
        variable: usize,
    },
    #[error("level {level}: diagonal block is not an integer matrix")]
    NonIntegerBlock { level: usize },
    #[error("level {level}: diagonal block has determinant {det}, expected ±1")]
    NotUnimodular { level: usize, det: String },
    #[error("map has {found} components, expected {expected}")]
    WrongArity { expected: usize, found: usize },
}

/// A polynomial map stored as its `h` output components in `h` variables.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CanonicalMap {
    filtration: Filtration,
    components: Vec<MultiPoly>,
}

impl CanonicalMap {
    pub fn identity(filtration: &Filtration) -> Self {
        CanonicalMap {
            filtration: filtration.clone(),
            components: qpoly::identity_vector(filtration.dim()),
        }
    }

    /// Wraps raw components; call [`validate_canonical`] before trusting the shape.
    pub fn from_components(filtration: &Filtration, components: Vec<MultiPoly>) -> Result<Self, Violation> {
        let h = filtration.dim();
        if components.len() != h {
            return Err(Violation::WrongArity {
                expected: h,
                found: components.len(),
            });
        }
        if let Some(bad) = components.iter().find(|c| c.num_vars() != h) {
            return Err(Violation::WrongArity {
                expected: h,
                found: bad.num_vars(),
            });
        }
        Ok(CanonicalMap {
            filtration: filtration.clone(),
            components,
        })
    }

    /// Per level: diagonal block `D_i` and tail polynomials in the full variable set.
    pub fn from_levels(
        filtration: &Filtration,
        blocks: &[RationalMatrix],
        tails: &[Vec<MultiPoly>],
    ) -> Result<Self, CanonicalError> {
        let h = filtration.dim();
        let n = filtration.num_levels();
        if blocks.len() != n || tails.len() != n {
            return Err(CanonicalError::Shape {
                level: blocks.len().min(tails.len()) + 1,
                reason: format!("expected {n} levels"),
            });
        }
        let mut components = Vec::with_capacity(h);
        for level in filtration.levels() {
            let k = filtration.level_dim(level);
            let off = filtration.offset(level);
            let block = &blocks[level - 1];
            let tail = &tails[level - 1];
            if block.rows() != k || block.cols() != k || tail.len() != k {
                return Err(CanonicalError::Shape {
                    level,
                    reason: format!("block must be {k}x{k} with {k} tail polynomials"),
                });
            }
            for r in 0..k {
                let lin = MultiPoly::linear(h, off, block.row(r));
                components.push(lin.add(&tail[r])?);
            }
        }
        Ok(CanonicalMap {
            filtration: filtration.clone(),
            components,
        })
    }

    /// `x_i ↦ D_i x_i + s_i` on every level.
    pub fn block_affine(filtration: &Filtration, blocks: &[RationalMatrix], shifts: &[Vec<Rat>]) -> Result<Self, CanonicalError> {
        let h = filtration.dim();
        let tails: Vec<Vec<MultiPoly>> = shifts
            .iter()
            .map(|s| s.iter().map(|c| MultiPoly::constant(h, c.clone())).collect())
            .collect();
        Self::from_levels(filtration, blocks, &tails)
    }

    /// Translation by `shift` on one level, identity elsewhere.
    pub fn translation(filtration: &Filtration, level: usize, shift: &[Rat]) -> Self {
        let mut f = Self::identity(filtration);
        let h = filtration.dim();
        for (j, c) in filtration.range(level).zip(shift) {
            f.components[j] = MultiPoly::var(h, j).add(&MultiPoly::constant(h, c.clone())).expect("same arity");
        }
        f
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    pub fn components(&self) -> &[MultiPoly] {
        &self.components
    }

    pub fn level_components(&self, level: usize) -> &[MultiPoly] {
        &self.components[self.filtration.range(level)]
    }

    pub fn is_identity(&self) -> bool {
        self.components == qpoly::identity_vector(self.filtration.dim())
    }

    /// Diagonal block `D_i`, read off the linear coefficients of the level's own variables.
    pub fn diag_block(&self, level: usize) -> RationalMatrix {
        let range = self.filtration.range(level);
        let k = range.len();
        let start = range.start;
        RationalMatrix::from_fn(k, k, |r, c| self.components[start + r].linear_coefficient(start + c))
    }

    /// The level's output minus its linear own-block part.
    pub fn tail(&self, level: usize) -> Vec<MultiPoly> {
        let range = self.filtration.range(level);
        let d = self.diag_block(level);
        let h = self.filtration.dim();
        range
            .clone()
            .enumerate()
            .map(|(r, j)| {
                let lin = MultiPoly::linear(h, range.start, d.row(r));
                self.components[j].sub(&lin).expect("same arity")
            })
            .collect()
    }

    /// Constant terms of the level's components.
    pub fn level_constants(&self, level: usize) -> Vec<Rat> {
        self.level_components(level).iter().map(MultiPoly::constant_term).collect()
    }

    /// When the level acts as a pure translation `x_i + c`, returns `c`.
    pub fn level_translation(&self, level: usize) -> Option<Vec<Rat>> {
        let range = self.filtration.range(level);
        let h = self.filtration.dim();
        let mut out = Vec::with_capacity(range.len());
        for j in range {
            let rest = self.components[j].sub(&MultiPoly::var(h, j)).expect("same arity");
            if !rest.is_constant() {
                return None;
            }
            out.push(rest.constant_term());
        }
        Some(out)
    }

    /// True when every level strictly below `level` is the identity.
    pub fn trivial_below(&self, level: usize) -> bool {
        let h = self.filtration.dim();
        (0..self.filtration.offset(level)).all(|j| self.components[j] == MultiPoly::var(h, j))
    }

    pub fn eval(&self, x: &[Rat]) -> Result<Vec<Rat>, CanonicalError> {
        self.check_point(x)?;
        Ok(qpoly::evaluate(&self.components, x)?)
    }

    fn check_point(&self, x: &[Rat]) -> Result<(), CanonicalError> {
        let h = self.filtration.dim();
        if x.len() != h {
            return Err(CanonicalError::PointDimension {
                expected: h,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn max_degree(&self) -> u32 {
        self.components.iter().filter_map(MultiPoly::degree).max().unwrap_or(0)
    }
}

impl fmt::Display for CanonicalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Checks block-triangular dependence and linear own-block action; for group
/// elements also that every diagonal block lies in `GL(k_i, Z)`.
pub fn validate_canonical(f: &CanonicalMap, as_group_element: bool) -> Result<(), Violation> {
    let filt = &f.filtration;
    for level in filt.levels() {
        let range = filt.range(level);
        for j in range.clone() {
            let comp = &f.components[j];
            for (exps, _) in comp.terms() {
                if let Some(v) = (range.end..filt.dim()).find(|&v| exps[v] > 0) {
                    return Err(Violation::DeeperDependence {
                        level,
                        coordinate: j + 1,
                        variable: v + 1,
                    });
                }
                let own: u32 = range.clone().map(|v| exps[v]).sum();
                let total: u32 = exps.iter().sum();
                if own > 0 && (own != 1 || total != 1) {
                    let v = range.clone().find(|&v| exps[v] > 0).expect("own variable present");
                    return Err(Violation::NonlinearOwnBlock {
                        level,
                        coordinate: j + 1,
                        variable: v + 1,
                    });
                }
            }
        }
        if as_group_element {
            let d = f.diag_block(level);
            let Some(di) = d.to_integer() else {
                return Err(Violation::NonIntegerBlock { level });
            };
            let det = di.det().expect("square block");
            if !det.abs().is_one() {
                return Err(Violation::NotUnimodular {
                    level,
                    det: det.to_string(),
                });
            }
        }
    }
    Ok(())
}

fn same_filtration(f: &CanonicalMap, g: &CanonicalMap) -> Result<(), CanonicalError> {
    if f.filtration != g.filtration {
        return Err(CanonicalError::FiltrationMismatch {
            left: f.filtration.block_dims.clone(),
            right: g.filtration.block_dims.clone(),
        });
    }
    Ok(())
}

/// `f ∘ g`.
pub fn compose_maps(f: &CanonicalMap, g: &CanonicalMap) -> Result<CanonicalMap, CanonicalError> {
    same_filtration(f, g)?;
    Ok(CanonicalMap {
        filtration: f.filtration.clone(),
        components: qpoly::compose(&f.components, &g.components)?,
    })
}

/// Exact inverse by back-substitution, level by level.
pub fn invert_map(f: &CanonicalMap) -> Result<CanonicalMap, CanonicalError> {
    let filt = &f.filtration;
    let h = filt.dim();
    // inverse components expressed in the output variables y; unsolved ones stay zero
    let mut inv: Vec<MultiPoly> = vec![MultiPoly::zero(h); h];
    for level in filt.levels() {
        let range = filt.range(level);
        let d_inv = f
            .diag_block(level)
            .inverse()
            .map_err(|_| CanonicalError::NotInvertible { level })?;
        let tail = f.tail(level);
        // y_i - q_i(x_{<i}(y))
        let rhs: Vec<MultiPoly> = range
            .clone()
            .enumerate()
            .map(|(r, j)| {
                let q = tail[r].substitute(&inv)?;
                Ok(MultiPoly::var(h, j).sub(&q)?)
            })
            .collect::<Result<_, CanonicalError>>()?;
        for (r, j) in range.clone().enumerate() {
            let mut acc = MultiPoly::zero(h);
            for (c, p) in rhs.iter().enumerate() {
                acc = acc.add(&p.scale(d_inv.get(r, c)))?;
            }
            inv[j] = acc;
        }
    }
    Ok(CanonicalMap {
        filtration: filt.clone(),
        components: inv,
    })
}

/// `f^e`; negative exponents go through the inverse.
pub fn power_map(f: &CanonicalMap, e: i64) -> Result<CanonicalMap, CanonicalError> {
    let base = if e < 0 { invert_map(f)? } else { f.clone() };
    let mut n = e.unsigned_abs();
    let mut result = CanonicalMap::identity(&f.filtration);
    let mut sq = base;
    while n > 0 {
        if n & 1 == 1 {
            result = compose_maps(&result, &sq)?;
        }
        n >>= 1;
        if n > 0 {
            sq = compose_maps(&sq, &sq)?;
        }
    }
    Ok(result)
}

/// `g ∘ f ∘ g⁻¹`.
pub fn conjugate_map(g: &CanonicalMap, f: &CanonicalMap) -> Result<CanonicalMap, CanonicalError> {
    let g_inv = invert_map(g)?;
    compose_maps(&compose_maps(g, f)?, &g_inv)
}

/// The diagonal blocks, one per level.
pub fn linearisation(f: &CanonicalMap) -> Vec<RationalMatrix> {
    f.filtration.levels().map(|l| f.diag_block(l)).collect()
}

/// The diagonal blocks when all of them are integral.
pub fn integer_linearisation(f: &CanonicalMap) -> Option<Vec<IntegerMatrix>> {
    linearisation(f).iter().map(RationalMatrix::to_integer).collect()
}

pub fn jacobian_at(f: &CanonicalMap, x0: &[Rat]) -> Result<RationalMatrix, CanonicalError> {
    f.check_point(x0)?;
    Ok(qpoly::jacobian_at(&f.components, x0)?)
}

/// `Π_i det(I - D_i)` over the levels of `f`.
pub fn level_determinant_product(f: &CanonicalMap) -> Rat {
    linearisation(f)
        .iter()
        .map(|d| d.identity_minus().and_then(|m| m.det()).expect("square block"))
        .fold(Rat::one(), |acc, d| acc * d)
}

pub fn rational_vector(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&x| Rat::from_integer(BigInt::from(x))).collect()
}

pub fn is_integral_vector(v: &[Rat]) -> bool {
    v.iter().all(|c| c.is_integer())
}

pub fn to_integer_vector(v: &[Rat]) -> Option<Vec<BigInt>> {
    v.iter().map(|c| c.is_integer().then(|| c.to_integer())).collect()
}

pub fn zero_vector(n: usize) -> Vec<Rat> {
    vec![Rat::zero(); n]
}
