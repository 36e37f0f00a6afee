# %% [markdown]
# # Pouring with gradual twists, and carrying samples upright

# %%
from labseq.kinematics import CartesianPose
from labseq.skills import (TwistProfile, UprightConstraint, generate_pour_waypoints,
                           pour_poses, stir_bar_profile, validate_upright)

plain = TwistProfile(118.0, 201.0)
gentle = stir_bar_profile(TwistProfile(122.0, 203.0))
for name, p in (("plain", plain), ("stir bar", gentle)):
    wps = generate_pour_waypoints(p)
    print(f"{name:9} {len(wps):2} twists of {p.total_angle / len(wps):.2f} deg, ends at {wps[-1]}")

# %% [markdown]
# A pour obviously fails an upright check; a short, slightly tilted carry
# passes.

# %%
rim = CartesianPose(position=(300.0, 0.0, 150.0))
print(validate_upright(pour_poses(rim, plain), UprightConstraint(15.0)))
carry = [CartesianPose.from_axis_angle((1, 0, 0), a, (300.0, 10.0 * a, 150.0)) for a in (0, 3, 6, 9)]
print(validate_upright(carry, UprightConstraint(15.0)))
