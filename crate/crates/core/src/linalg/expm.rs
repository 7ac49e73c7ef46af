use super::lu::Lu;
use super::DenseMatrix;

// Degree-13 diagonal Padé coefficients and the matching scaling threshold
// for double precision (Higham, "The scaling and squaring method for the
// matrix exponential revisited", 2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA_13: f64 = 5.371920351148152;

/// `exp(a)` by scaling and squaring around a [13/13] Padé approximant.
pub(crate) fn expm_pade13(a: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    let norm = a.norm_one();
    if norm == 0.0 {
        return DenseMatrix::identity(n);
    }
    let s = if norm > THETA_13 {
        libm::ceil(libm::log2(norm / THETA_13)).max(0.0) as i32
    } else {
        0
    };
    let a = a.scale(libm::ldexp(1.0, -s));
    let b = &PADE13;
    let ident = DenseMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let lincomb = |c6: f64, c4: f64, c2: f64, c0: f64| {
        a6.scale(c6)
            .add(&a4.scale(c4))
            .add(&a2.scale(c2))
            .add(&ident.scale(c0))
    };
    let u_inner = a6
        .matmul(&a6.scale(b[13]).add(&a4.scale(b[11])).add(&a2.scale(b[9])))
        .add(&lincomb(b[7], b[5], b[3], b[1]));
    let u = a.matmul(&u_inner);
    let v = a6
        .matmul(&a6.scale(b[12]).add(&a4.scale(b[10])).add(&a2.scale(b[8])))
        .add(&lincomb(b[6], b[4], b[2], b[0]));

    let p = v.add(&u);
    let q = v.sub(&u);
    let lu = Lu::new(&q).expect("Padé denominator is nonsingular after scaling");
    let mut r = lu.solve(&p);
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r
}
