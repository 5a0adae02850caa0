//! The flat domain of a utility: flattening, the `d` map, the self-demanded
//! price, the canonical manifolds and the Jacobians of the Hicksian and offer
//! maps.

use sntp::geometry::{
    d_inverse, d_map, fixed_point, flatten, jacobian_phi, jacobian_psi, manifold_residual, sample_manifold, unflatten,
    ManifoldKind,
};
use sntp::{Bundle, ExpTransform, PriceVector, Utility, UtilitySpec};

pub fn run() -> sntp::Result<()> {
    let u = ExpTransform::product_form(vec![0.5, 0.5], 2.0)?;
    let c = Bundle::new(vec![2.0, 0.5])?;

    let f = flatten(&u, &c)?;
    println!("flatten(2, 0.5) = q {:?}, u {}", f.q, f.u);
    println!("unflatten back  = {:?}", unflatten(&u, &f)?.as_slice());
    let p = d_map(&u, &f)?;
    println!("d(f)            = {:?}", p.as_slice());
    println!("d^-1(d(f))      = {:?}", d_inverse(&u, &p)?);

    let ces = UtilitySpec::ces(vec![0.3, 0.7], 0.5)?;
    let star = fixed_point(&ces)?;
    println!("ces self-demanded price {:?}, x_n there {:?}", star.as_slice(), ces.normalized_demand(&star)?.as_slice());

    let anchor = Bundle::new(vec![1.0, 1.0])?;
    let grid: Vec<Vec<f64>> = [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|&q| vec![q]).collect();
    for kind in [ManifoldKind::Indifference, ManifoldKind::Offer, ManifoldKind::TradeHyperplane] {
        let head = if kind == ManifoldKind::TradeHyperplane {
            vec![vec![0.2], vec![0.6], vec![1.0], vec![1.4], vec![1.8]]
        } else {
            grid.clone()
        };
        let s = sample_manifold(&u, kind, &anchor, &head)?;
        let worst = s
            .points
            .iter()
            .map(|pt| manifold_residual(&u, kind, &anchor, pt))
            .collect::<sntp::Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!("{kind}: {} points, worst residual {worst:.1e}", s.points.len());
    }

    let demanded = u.inverse_normalized_demand(&c)?;
    let off = PriceVector::new(vec![0.3, 0.9])?;
    println!("J_phi at the demanded price:\n{}", jacobian_phi(&u, &c, &demanded)?);
    println!("J_psi at the demanded price:\n{}", jacobian_psi(&u, &c, &demanded)?);
    println!("J_phi elsewhere:\n{}", jacobian_phi(&u, &c, &off)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> sntp::Result<()> {
    run()
}
