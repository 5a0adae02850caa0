//! Closed-form demand for the two utility families: normalized and
//! wealth-scaled demand, expenditure, Hicksian demand and the predicates.

use sntp::prefs::{check_attractive, check_sharp, demand_at_wealth};
use sntp::{Bundle, ExpTransform, PriceVector, Utility, UtilitySpec};

pub fn run() -> sntp::Result<()> {
    let cd = UtilitySpec::cobb_douglas_log(vec![0.5, 0.5])?;
    let ces = UtilitySpec::ces(vec![0.5, 0.5], 0.5)?;
    let product = ExpTransform::product_form(vec![0.5, 0.5], 2.0)?;
    let p = PriceVector::new(vec![1.0, 2.0])?;
    let y = Bundle::new(vec![2.0, 1.0])?;

    for (name, u) in [("cobb-douglas", &cd as &dyn Utility), ("ces 0.5", &ces), ("c1*c2", &product)] {
        let x = u.normalized_demand(&p)?;
        let z = demand_at_wealth(u, &y, &p)?;
        let v = u.indirect_utility_normalized(&p)?;
        let h = u.hicksian_demand(&p, u.utility(&y)?)?;
        println!("{name}");
        println!("  x_n(p)        = {:?}", x.as_slice());
        println!("  demand at p·y = {:?}", z.as_slice());
        println!("  v_n(p)        = {v:.6}, lambda_n = {:.6}", u.lambda_n(&p)?);
        println!("  h(p, u(y))    = {:?}, cost {:.6}", h.as_slice(), p.dot(&h));
        println!("  inverse of y  = {:?}", u.inverse_normalized_demand(&y)?.as_slice());
        let sharp = check_sharp(u, &y, &p)?;
        let attractive = check_attractive(u, &y, &p, 0, 1)? && check_attractive(u, &y, &p, 1, 0)?;
        println!("  sharp {sharp}, attractive {attractive}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sntp::Result<()> {
    run()
}
