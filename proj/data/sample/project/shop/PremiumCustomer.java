package shop;

public class PremiumCustomer extends Customer {
    private int points;

    public PremiumCustomer(String email) {
        super(email);
    }

    public void award(Receipt receipt) {
        points += (int) (receipt.getAmountCents() / 100);
    }
}
